#include "quizgen/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <locale>
#include <map>
#include <unordered_map>

#include "quizgen/embedding.hpp"
#include "quizgen/error.hpp"
#include "quizgen/stemmer.hpp"

namespace quizgen {

TokenSequence::TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (const auto& t : tokens_) {
        if (t.empty()) throw Error(ErrorCode::PreconditionViolation, "token sequences cannot hold empty tokens");
    }
}

TokenSequence::TokenSequence(std::initializer_list<std::string> tokens)
    : TokenSequence(std::vector<std::string>(tokens)) {}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

namespace {

constexpr char32_t kReplacement = 0xFFFD;

/// Lenient decoder: every malformed byte becomes U+FFFD.
std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : (c & 0xF8) == 0xF0 ? 4 : 0;
        if (len == 0 || i + len > s.size()) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!ok) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

/// Character classes come from the C.UTF-8 locale when the platform has it
/// (full Unicode tables); otherwise only ASCII is classified and every other
/// code point counts as a letter.
class CharClasses {
public:
    CharClasses() {
        for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
            try {
                locale_ = std::locale(name);
                unicode_ = true;
                break;
            } catch (const std::runtime_error&) {
            }
        }
        facet_ = &std::use_facet<std::ctype<wchar_t>>(locale_);
    }

    bool space(char32_t c) const { return classify(c, std::ctype_base::space, is_ascii_space(c)); }

    bool alnum(char32_t c) const {
        const bool ascii = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
        if (c < 0x80) return ascii;
        if (!unicode_) return c != kReplacement;
        return facet_->is(std::ctype_base::alnum, static_cast<wchar_t>(c));
    }

    char32_t lower(char32_t c) const {
        if (c < 0x80) return (c >= 'A' && c <= 'Z') ? c + 32 : c;
        if (!unicode_) return c;
        return static_cast<char32_t>(facet_->tolower(static_cast<wchar_t>(c)));
    }

private:
    static bool is_ascii_space(char32_t c) { return c == ' ' || (c >= '\t' && c <= '\r'); }

    bool classify(char32_t c, std::ctype_base::mask m, bool ascii) const {
        if (c < 0x80 || !unicode_) return ascii;
        return facet_->is(m, static_cast<wchar_t>(c));
    }

    std::locale locale_ = std::locale::classic();
    const std::ctype<wchar_t>* facet_ = nullptr;
    bool unicode_ = false;
};

const CharClasses& char_classes() {
    static const CharClasses classes;
    return classes;
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
    const auto& cc = char_classes();
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
    };
    for (char32_t c : decode_utf8(text)) {
        if (cc.space(c)) {
            flush();
        } else if (cc.alnum(c)) {
            append_utf8(current, cc.lower(c));
        } else {
            flush();
            std::string punct;
            append_utf8(punct, cc.lower(c));
            tokens.push_back(std::move(punct));
        }
    }
    flush();
    return TokenSequence(std::move(tokens));
}

std::string_view metric_name(Metric m) noexcept {
    switch (m) {
        case Metric::Bleu: return "bleu";
        case Metric::Rouge1: return "rouge1";
        case Metric::RougeL: return "rougeL";
        case Metric::Meteor: return "meteor";
        case Metric::EmbedF1: return "embed_f1";
    }
    return {};
}

Metric parse_metric(std::string_view name) {
    for (auto m : kAllMetrics) {
        if (metric_name(m) == name) return m;
    }
    throw Error(ErrorCode::UnknownMetric, "unknown metric " + std::string(name));
}

std::string_view metric_variant(Metric m) noexcept {
    switch (m) {
        case Metric::Bleu:
            return "BLEU-4; corpus level: pooled counts, no smoothing; sentence level: add-1 smoothing for "
                   "orders >= 2 with zero matches; multi-reference clipping; closest-reference brevity penalty";
        case Metric::Rouge1: return "ROUGE-1 F1, clipped unigram overlap, max over references";
        case Metric::RougeL: return "ROUGE-L F1 (LCS), max over references";
        case Metric::Meteor:
            return "METEOR exact+Porter-stem stages, no synonyms, alpha=0.9 beta=3.0 gamma=0.5, max over references";
        case Metric::EmbedF1:
            return "greedy cosine-matching F1 over token embeddings, similarities clamped to [0,1], no idf, "
                   "no baseline rescaling, max over references";
    }
    return {};
}

// ---------------------------------------------------------------------------
// n-gram counting
// ---------------------------------------------------------------------------

namespace {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

/// Keys are length-prefixed token concatenations, so distinct n-grams never collide.
NgramCounts count_ngrams(const TokenSequence& seq, int n) {
    NgramCounts counts;
    const auto un = static_cast<std::size_t>(n);
    if (seq.size() < un) return counts;
    std::string key;
    for (std::size_t i = 0; i + un <= seq.size(); ++i) {
        key.clear();
        for (std::size_t k = i; k < i + un; ++k) {
            const auto& t = seq[k];
            key.append(std::to_string(t.size()));
            key.push_back(':');
            key.append(t);
        }
        ++counts[key];
    }
    return counts;
}

std::size_t ngram_total(const TokenSequence& seq, int n) {
    const auto un = static_cast<std::size_t>(n);
    return seq.size() >= un ? seq.size() - un + 1 : 0;
}

/// Candidate n-gram matches clipped by the per-n-gram max count over references.
std::size_t clipped_matches(const NgramCounts& cand, std::span<const NgramCounts> refs) {
    std::size_t matches = 0;
    for (const auto& [gram, count] : cand) {
        std::size_t max_ref = 0;
        for (const auto& r : refs) {
            if (auto it = r.find(gram); it != r.end()) max_ref = std::max(max_ref, it->second);
        }
        matches += std::min(count, max_ref);
    }
    return matches;
}

std::size_t closest_ref_length(std::size_t c, std::span<const TokenSequence> refs) {
    std::size_t best = refs.front().size();
    for (const auto& r : refs) {
        const auto d = r.size() > c ? r.size() - c : c - r.size();
        const auto bd = best > c ? best - c : c - best;
        if (d < bd || (d == bd && r.size() < best)) best = r.size();
    }
    return best;
}

double brevity_penalty(double c, double r) {
    if (c <= 0) return 0.0;
    return c > r ? 1.0 : std::exp(1.0 - r / c);
}

void check_refs(std::span<const TokenSequence> references) {
    if (references.empty()) throw Error(ErrorCode::PreconditionViolation, "at least one reference is required");
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

double bleu_sentence(const TokenSequence& candidate, std::span<const TokenSequence> references, int max_n,
                     bool smooth) {
    check_refs(references);
    if (max_n < 1) throw Error(ErrorCode::PreconditionViolation, "max_n must be >= 1");
    if (candidate.empty()) return 0.0;
    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        std::vector<NgramCounts> ref_counts;
        for (const auto& r : references) ref_counts.push_back(count_ngrams(r, n));
        auto matches = static_cast<double>(clipped_matches(count_ngrams(candidate, n), ref_counts));
        auto total = static_cast<double>(ngram_total(candidate, n));
        if (matches == 0.0) {
            if (!smooth || n == 1) return 0.0;
            matches = 1.0;
            total += 1.0;
        }
        log_sum += std::log(matches / total);
    }
    const auto c = candidate.size();
    const double bp = brevity_penalty(static_cast<double>(c), static_cast<double>(closest_ref_length(c, references)));
    return std::clamp(bp * std::exp(log_sum / max_n), 0.0, 1.0);
}

double bleu_corpus(std::span<const BleuPair> pairs, int max_n) {
    if (pairs.empty()) throw Error(ErrorCode::PreconditionViolation, "bleu_corpus needs at least one pair");
    if (max_n < 1) throw Error(ErrorCode::PreconditionViolation, "max_n must be >= 1");
    std::vector<double> matches(static_cast<std::size_t>(max_n), 0.0);
    std::vector<double> totals(static_cast<std::size_t>(max_n), 0.0);
    double cand_len = 0.0;
    double ref_len = 0.0;
    for (const auto& p : pairs) {
        check_refs(p.references);
        cand_len += static_cast<double>(p.candidate.size());
        ref_len += static_cast<double>(closest_ref_length(p.candidate.size(), p.references));
        for (int n = 1; n <= max_n; ++n) {
            std::vector<NgramCounts> ref_counts;
            for (const auto& r : p.references) ref_counts.push_back(count_ngrams(r, n));
            const auto i = static_cast<std::size_t>(n - 1);
            matches[i] += static_cast<double>(clipped_matches(count_ngrams(p.candidate, n), ref_counts));
            totals[i] += static_cast<double>(ngram_total(p.candidate, n));
        }
    }
    double log_sum = 0.0;
    int orders = 0;
    for (std::size_t i = 0; i < matches.size(); ++i) {
        if (totals[i] == 0.0) continue;
        if (matches[i] == 0.0) return 0.0;
        log_sum += std::log(matches[i] / totals[i]);
        ++orders;
    }
    if (orders == 0) return 0.0;
    return std::clamp(brevity_penalty(cand_len, ref_len) * std::exp(log_sum / orders), 0.0, 1.0);
}

double rouge_n(const TokenSequence& candidate, std::span<const TokenSequence> references, int n) {
    check_refs(references);
    if (n < 1) throw Error(ErrorCode::PreconditionViolation, "n must be >= 1");
    const auto cand = count_ngrams(candidate, n);
    const auto cand_total = ngram_total(candidate, n);
    if (cand_total == 0) return 0.0;
    double best = 0.0;
    for (const auto& ref : references) {
        const auto ref_total = ngram_total(ref, n);
        if (ref_total == 0) continue;
        const auto rc = count_ngrams(ref, n);
        const auto overlap = static_cast<double>(clipped_matches(cand, std::span(&rc, 1)));
        best = std::max(best, f1(overlap / static_cast<double>(cand_total), overlap / static_cast<double>(ref_total)));
    }
    return best;
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
    if (a.empty() || b.empty()) return 0;
    if (b.size() <= 64) {
        // Bit-parallel row update over match masks of b.
        const std::uint64_t live = b.size() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << b.size()) - 1;
        std::uint64_t v = ~std::uint64_t{0};
        for (std::size_t i = 0; i < a.size(); ++i) {
            std::uint64_t match = 0;
            for (std::size_t j = 0; j < b.size(); ++j) {
                match |= static_cast<std::uint64_t>(a[i] == b[j]) << j;
            }
            const std::uint64_t u = v & match;
            v = (v + u) | (v - u);
        }
        return static_cast<std::size_t>(std::popcount(~v & live));
    }
    std::vector<std::size_t> row(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = 0;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(up, row[j - 1]);
            diag = up;
        }
    }
    return row[b.size()];
}

double rouge_l(const TokenSequence& candidate, std::span<const TokenSequence> references) {
    check_refs(references);
    if (candidate.empty()) return 0.0;
    double best = 0.0;
    for (const auto& ref : references) {
        if (ref.empty()) continue;
        const auto lcs = static_cast<double>(lcs_length(candidate, ref));
        best = std::max(best, f1(lcs / static_cast<double>(candidate.size()), lcs / static_cast<double>(ref.size())));
    }
    return best;
}

// ---------------------------------------------------------------------------
// METEOR
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kUnaligned = std::numeric_limits<std::size_t>::max();

/// Exhaustive search over maximal matchings for one stage, with
/// branch-and-bound on chunk count. Positions already aligned by an earlier
/// stage are fixed.
class StageSearch {
public:
    // Beyond this many visited nodes the best alignment found so far is kept.
    static constexpr std::size_t kNodeBudget = 2'000'000;

    StageSearch(std::vector<std::size_t>& align, std::vector<std::string> cand_keys,
                std::vector<std::string> ref_keys, std::vector<bool>& ref_used)
        : align_(align), ref_used_(ref_used), cand_keys_(std::move(cand_keys)), ref_keys_(std::move(ref_keys)) {
        // Eligible candidate positions: unaligned with a key present among free reference positions.
        std::map<std::string, std::size_t> free_refs;
        for (std::size_t j = 0; j < ref_keys_.size(); ++j) {
            if (!ref_used_[j]) ++free_refs[ref_keys_[j]];
        }
        std::map<std::string, std::size_t> cand_count;
        for (std::size_t i = 0; i < cand_keys_.size(); ++i) {
            if (align_[i] == kUnaligned && free_refs.count(cand_keys_[i])) ++cand_count[cand_keys_[i]];
        }
        eligible_.assign(cand_keys_.size(), false);
        for (std::size_t i = 0; i < cand_keys_.size(); ++i) {
            if (align_[i] == kUnaligned && cand_count.count(cand_keys_[i])) eligible_[i] = true;
        }
        for (const auto& [key, n] : cand_count) {
            quota_[key] = std::min(n, free_refs[key]);
            remaining_[key] = n;
        }
    }

    void run() {
        best_chunks_ = kUnaligned;
        work_ = align_;
        dfs(0, 0);
        align_ = best_;
        for (std::size_t j = 0; j < ref_used_.size(); ++j) ref_used_[j] = false;
        for (auto a : align_) {
            if (a != kUnaligned) ref_used_[a] = true;
        }
    }

private:
    bool starts_chunk(std::size_t i) const {
        if (work_[i] == kUnaligned) return false;
        return !(i > 0 && work_[i - 1] != kUnaligned && work_[i] == work_[i - 1] + 1);
    }

    void dfs(std::size_t i, std::size_t chunks) {
        if (chunks >= best_chunks_) return;
        if (++nodes_ > kNodeBudget && best_chunks_ != kUnaligned) return;
        if (i == work_.size()) {
            best_chunks_ = chunks;
            best_ = work_;
            return;
        }
        if (!eligible_[i]) {
            dfs(i + 1, chunks + (starts_chunk(i) ? 1 : 0));
            return;
        }
        const auto& key = cand_keys_[i];
        auto& quota = quota_[key];
        auto& remaining = remaining_[key];
        --remaining;
        if (quota > 0) {
            // Try the reference position that extends the previous chunk first.
            std::vector<std::size_t> options;
            if (i > 0 && work_[i - 1] != kUnaligned) {
                const auto next = work_[i - 1] + 1;
                if (next < ref_keys_.size() && !ref_used_[next] && ref_keys_[next] == key) options.push_back(next);
            }
            for (std::size_t j = 0; j < ref_keys_.size(); ++j) {
                if (!ref_used_[j] && ref_keys_[j] == key && (options.empty() || options.front() != j)) {
                    options.push_back(j);
                }
            }
            for (auto j : options) {
                ref_used_[j] = true;
                work_[i] = j;
                --quota;
                dfs(i + 1, chunks + (starts_chunk(i) ? 1 : 0));
                ++quota;
                work_[i] = kUnaligned;
                ref_used_[j] = false;
            }
        }
        if (remaining >= quota) dfs(i + 1, chunks);
        ++remaining;
    }

    std::vector<std::size_t>& align_;
    std::vector<bool>& ref_used_;
    std::vector<std::string> cand_keys_;
    std::vector<std::string> ref_keys_;
    std::vector<bool> eligible_;
    std::map<std::string, std::size_t> quota_;
    std::map<std::string, std::size_t> remaining_;
    std::vector<std::size_t> work_;
    std::vector<std::size_t> best_;
    std::size_t best_chunks_ = kUnaligned;
    std::size_t nodes_ = 0;
};

std::size_t count_chunks(const std::vector<std::size_t>& align) {
    std::size_t chunks = 0;
    for (std::size_t i = 0; i < align.size(); ++i) {
        if (align[i] == kUnaligned) continue;
        if (!(i > 0 && align[i - 1] != kUnaligned && align[i] == align[i - 1] + 1)) ++chunks;
    }
    return chunks;
}

std::vector<std::string> stems(const TokenSequence& seq) {
    std::vector<std::string> out;
    out.reserve(seq.size());
    for (const auto& t : seq) out.push_back(porter_stem(t));
    return out;
}

}  // namespace

MeteorAlignment meteor_align(const TokenSequence& candidate, const TokenSequence& reference) {
    std::vector<std::size_t> align(candidate.size(), kUnaligned);
    std::vector<bool> ref_used(reference.size(), false);
    StageSearch(align, candidate.tokens(), reference.tokens(), ref_used).run();
    StageSearch(align, stems(candidate), stems(reference), ref_used).run();

    MeteorAlignment out;
    out.candidate_to_reference.resize(candidate.size());
    for (std::size_t i = 0; i < align.size(); ++i) {
        if (align[i] != kUnaligned) {
            out.candidate_to_reference[i] = align[i];
            ++out.matches;
        }
    }
    out.chunks = count_chunks(align);
    return out;
}

double meteor(const TokenSequence& candidate, std::span<const TokenSequence> references, const MeteorParams& params) {
    check_refs(references);
    if (candidate.empty()) return 0.0;
    double best = 0.0;
    for (const auto& ref : references) {
        if (ref.empty()) continue;
        const auto a = meteor_align(candidate, ref);
        if (a.matches == 0) continue;
        const double m = static_cast<double>(a.matches);
        const double p = m / static_cast<double>(candidate.size());
        const double r = m / static_cast<double>(ref.size());
        const double fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
        const double penalty = params.gamma * std::pow(static_cast<double>(a.chunks) / m, params.beta);
        best = std::max(best, fmean * (1.0 - penalty));
    }
    return std::clamp(best, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Embedding F1
// ---------------------------------------------------------------------------

namespace {

double clamped_cosine(const Vector& a, const Vector& b) {
    double dot = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
    return std::clamp(dot, 0.0, 1.0);
}

}  // namespace

double embed_f1(const TokenSequence& candidate, std::span<const TokenSequence> references,
                const EmbeddingProvider& embedder) {
    check_refs(references);
    if (candidate.empty()) return 0.0;
    const auto cand_vecs = embedder.embed(candidate.tokens());
    check_embeddings(cand_vecs, candidate.size(), embedder.dimension());
    double best = 0.0;
    for (const auto& ref : references) {
        if (ref.empty()) continue;
        const auto ref_vecs = embedder.embed(ref.tokens());
        check_embeddings(ref_vecs, ref.size(), embedder.dimension());
        std::vector<double> best_for_cand(cand_vecs.size(), 0.0);
        double recall = 0.0;
        for (const auto& rv : ref_vecs) {
            double best_for_ref = 0.0;
            for (std::size_t i = 0; i < cand_vecs.size(); ++i) {
                const double s = clamped_cosine(rv, cand_vecs[i]);
                best_for_ref = std::max(best_for_ref, s);
                best_for_cand[i] = std::max(best_for_cand[i], s);
            }
            recall += best_for_ref;
        }
        recall /= static_cast<double>(ref_vecs.size());
        double precision = 0.0;
        for (double s : best_for_cand) precision += s;
        precision /= static_cast<double>(cand_vecs.size());
        best = std::max(best, f1(precision, recall));
    }
    return std::clamp(best, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

double score_tokens(Metric metric, const TokenSequence& candidate, std::span<const TokenSequence> references,
                    const EmbeddingProvider* embedder) {
    switch (metric) {
        case Metric::Bleu: return bleu_sentence(candidate, references);
        case Metric::Rouge1: return rouge_n(candidate, references, 1);
        case Metric::RougeL: return rouge_l(candidate, references);
        case Metric::Meteor: return meteor(candidate, references);
        case Metric::EmbedF1:
            if (!embedder) throw Error(ErrorCode::MissingEmbedder, "embed_f1 requires an embedding provider");
            return embed_f1(candidate, references, *embedder);
    }
    throw Error(ErrorCode::UnknownMetric, "unknown metric");
}

MetricScore score(Metric metric, std::string_view candidate_text, std::span<const std::string> reference_texts,
                  const EmbeddingProvider* embedder) {
    if (metric == Metric::EmbedF1 && !embedder) {
        throw Error(ErrorCode::MissingEmbedder, "embed_f1 requires an embedding provider");
    }
    std::vector<TokenSequence> refs;
    refs.reserve(reference_texts.size());
    for (const auto& r : reference_texts) refs.push_back(tokenize(r));
    return {metric, score_tokens(metric, tokenize(candidate_text), refs, embedder)};
}

MetricScore score(std::string_view metric_name, std::string_view candidate_text,
                  std::span<const std::string> reference_texts, const EmbeddingProvider* embedder) {
    return score(parse_metric(metric_name), candidate_text, reference_texts, embedder);
}

}  // namespace quizgen
