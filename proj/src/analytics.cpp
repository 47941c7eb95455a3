#include "quizgen/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "quizgen/error.hpp"
#include "quizgen/orchestrator.hpp"

namespace quizgen {

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::DegenerateInput, "pearson inputs differ in length");
    if (x.size() < 2) throw Error(ErrorCode::DegenerateInput, "pearson needs at least two observations");
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    if (constant(x) || constant(y)) throw Error(ErrorCode::DegenerateInput, "pearson input has zero variance");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::DegenerateInput, "pearson input has zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

AcceptanceReport acceptance_rates(std::span<const AnnotationRecord> records) {
    AcceptanceReport out;
    for (const auto& r : records) {
        const bool acc = r.judgment.accepted();
        ++out.overall.total;
        out.overall.accepted += acc;
        for (const auto& m : r.model_ids) {
            auto& s = out.per_model[m];
            ++s.total;
            s.accepted += acc;
        }
    }
    return out;
}

std::map<ModelId, ErrorBreakdown> error_distribution(std::span<const AnnotationRecord> records) {
    std::map<ModelId, std::map<std::string, std::size_t>> cat_counts;
    std::map<ModelId, std::map<std::string, std::size_t>> sub_counts;
    std::map<ModelId, std::size_t> totals;
    for (const auto& r : records) {
        for (const auto& m : r.model_ids) {
            ++totals[m];
            if (r.judgment.accepted()) {
                ++cat_counts[m]["Accepted"];
            } else {
                const auto& reason = *r.judgment.reason();
                ++cat_counts[m][std::string(label(reason.category()))];
                ++sub_counts[m][std::string(label(reason.subtype()))];
            }
        }
    }
    std::map<ModelId, ErrorBreakdown> out;
    for (const auto& [m, total] : totals) {
        ErrorBreakdown b;
        b.total = total;
        const double t = static_cast<double>(total);
        for (const char* col : kOutcomeColumns) b.categories[col] = cat_counts[m][col] / t;
        for (const auto& cat : taxonomy()) {
            for (const auto& leaf : cat.leaves) {
                const std::string key(leaf.label);
                b.subtypes[key] = sub_counts[m][key] / t;
            }
        }
        out.emplace(m, std::move(b));
    }
    return out;
}

std::vector<AnnotatorPair> find_co_annotations(std::span<const AnnotationRecord> records) {
    struct Item {
        ModelIdSet model_ids;
        std::map<std::string, int> verdicts;
    };
    std::map<ItemKey, Item> items;
    for (const auto& r : records) {
        auto& item = items[ItemKey{r.topic_id, r.selection.answer_text, r.question_text}];
        item.model_ids.insert(r.model_ids.begin(), r.model_ids.end());
        item.verdicts.try_emplace(r.annotator_id, r.judgment.accepted() ? 1 : 0);
    }
    std::map<std::pair<std::string, std::string>, std::vector<SharedItem>> pairs;
    for (const auto& [key, item] : items) {
        for (auto a = item.verdicts.begin(); a != item.verdicts.end(); ++a) {
            for (auto b = std::next(a); b != item.verdicts.end(); ++b) {
                pairs[{a->first, b->first}].push_back(SharedItem{key, item.model_ids, a->second, b->second});
            }
        }
    }
    std::vector<AnnotatorPair> out;
    out.reserve(pairs.size());
    for (auto& [names, shared] : pairs) out.push_back(AnnotatorPair{names, std::move(shared)});
    return out;
}

AgreementReport iaa(std::span<const AnnotationRecord> records) {
    const auto pairs = find_co_annotations(records);
    AgreementReport report;
    std::set<ItemKey> shared_keys;
    std::vector<double> x, y;
    std::map<ModelId, std::pair<std::vector<double>, std::vector<double>>> per_model;
    for (const auto& pair : pairs) {
        for (const auto& item : pair.items) {
            shared_keys.insert(item.key);
            x.insert(x.end(), {double(item.first), double(item.second)});
            y.insert(y.end(), {double(item.second), double(item.first)});
            for (const auto& m : item.model_ids) {
                auto& [mx, my] = per_model[m];
                mx.insert(mx.end(), {double(item.first), double(item.second)});
                my.insert(my.end(), {double(item.second), double(item.first)});
            }
        }
    }
    report.co_annotated_count = shared_keys.size();
    report.coefficient = pearson(x, y);
    for (const auto& [m, xy] : per_model) {
        try {
            report.per_model_coefficients[m] = pearson(xy.first, xy.second);
        } catch (const Error&) {
        }
    }
    return report;
}

std::map<ConceptKey, std::vector<std::string>> build_references(std::span<const AnnotationRecord> records) {
    std::map<ConceptKey, std::vector<std::string>> out;
    std::map<ConceptKey, std::set<std::string>> seen;
    for (const auto& r : records) {
        if (!r.judgment.accepted()) continue;
        ConceptKey key{r.topic_id, r.selection.answer_text};
        if (seen[key].insert(dedup_key(r.question_text)).second) out[key].push_back(r.question_text);
    }
    return out;
}

namespace {

class TokenCache {
public:
    const TokenSequence& get(const std::string& text) {
        auto it = cache_.find(text);
        if (it == cache_.end()) it = cache_.emplace(text, tokenize(text)).first;
        return it->second;
    }

private:
    std::unordered_map<std::string, TokenSequence> cache_;
};

struct Instance {
    const AnnotationRecord* record;
    TokenSequence candidate;
    std::vector<TokenSequence> references;
};

/// Records paired with their same-concept references, own text excluded.
struct Instances {
    std::vector<Instance> scorable;
    std::size_t excluded = 0;
};

Instances collect_instances(std::span<const AnnotationRecord> records) {
    const auto refs = build_references(records);
    TokenCache tokens;
    Instances out;
    for (const auto& r : records) {
        std::vector<TokenSequence> pool;
        if (auto it = refs.find(ConceptKey{r.topic_id, r.selection.answer_text}); it != refs.end()) {
            const auto own = dedup_key(r.question_text);
            for (const auto& text : it->second) {
                if (dedup_key(text) != own) pool.push_back(tokens.get(text));
            }
        }
        if (pool.empty()) {
            ++out.excluded;
            continue;
        }
        out.scorable.push_back(Instance{&r, tokens.get(r.question_text), std::move(pool)});
    }
    return out;
}

void require_embedder(Metric metric, const EmbeddingProvider* embedder) {
    if (metric == Metric::EmbedF1 && embedder == nullptr) {
        throw Error(ErrorCode::MissingEmbedder, "embed_f1 requires an embedding provider");
    }
}

}  // namespace

InstanceCorrelation instance_correlation(std::span<const AnnotationRecord> records, Metric metric,
                                         const EmbeddingProvider* embedder) {
    require_embedder(metric, embedder);
    const auto inst = collect_instances(records);
    std::vector<double> scores, verdicts;
    for (const auto& i : inst.scorable) {
        scores.push_back(score_tokens(metric, i.candidate, i.references, embedder));
        verdicts.push_back(verdict_value(i.record->judgment));
    }
    InstanceCorrelation out;
    out.scored = inst.scorable.size();
    out.excluded = inst.excluded;
    out.coefficient = pearson(scores, verdicts);
    return out;
}

std::map<ModelId, double> model_metric_values(std::span<const AnnotationRecord> records, Metric metric,
                                              const EmbeddingProvider* embedder) {
    require_embedder(metric, embedder);
    const auto inst = collect_instances(records);
    std::map<ModelId, std::vector<std::size_t>> by_model;
    for (std::size_t k = 0; k < inst.scorable.size(); ++k) {
        for (const auto& m : inst.scorable[k].record->model_ids) by_model[m].push_back(k);
    }
    std::map<ModelId, double> out;
    if (metric == Metric::Bleu) {
        for (const auto& [m, idx] : by_model) {
            std::vector<BleuPair> pairs;
            pairs.reserve(idx.size());
            for (auto k : idx) pairs.push_back(BleuPair{inst.scorable[k].candidate, inst.scorable[k].references});
            out[m] = bleu_corpus(pairs);
        }
        return out;
    }
    std::vector<double> scores(inst.scorable.size());
    for (std::size_t k = 0; k < inst.scorable.size(); ++k) {
        scores[k] = score_tokens(metric, inst.scorable[k].candidate, inst.scorable[k].references, embedder);
    }
    for (const auto& [m, idx] : by_model) {
        double sum = 0.0;
        for (auto k : idx) sum += scores[k];
        out[m] = sum / static_cast<double>(idx.size());
    }
    return out;
}

SystemCorrelation system_correlation(std::span<const AnnotationRecord> records, Metric metric,
                                     const EmbeddingProvider* embedder) {
    const auto acc = acceptance_rates(records);
    if (acc.per_model.size() < kMinSystemModels) {
        throw Error(ErrorCode::TooFewModels, "system correlation needs at least 3 models, got " +
                                                 std::to_string(acc.per_model.size()));
    }
    SystemCorrelation out;
    out.metric_values = model_metric_values(records, metric, embedder);
    if (out.metric_values.size() < kMinSystemModels) {
        throw Error(ErrorCode::TooFewModels, "only " + std::to_string(out.metric_values.size()) +
                                                 " models have scorable questions; need at least 3");
    }
    std::vector<double> x, y;
    for (const auto& [m, v] : out.metric_values) {
        out.acceptance[m] = acc.per_model.at(m).rate();
        x.push_back(out.acceptance[m]);
        y.push_back(v);
    }
    out.coefficient = pearson(x, y);
    return out;
}

double upper_bound(std::span<const AnnotationRecord> records, Metric metric, const EmbeddingProvider* embedder) {
    require_embedder(metric, embedder);
    std::map<ConceptKey, std::vector<std::string>> groups;
    std::set<std::tuple<ConceptKey, std::string, std::string>> seen;
    for (const auto& r : records) {
        if (!r.judgment.accepted()) continue;
        ConceptKey key{r.topic_id, r.selection.answer_text};
        if (seen.emplace(key, r.annotator_id, dedup_key(r.question_text)).second) {
            groups[key].push_back(r.question_text);
        }
    }
    TokenCache tokens;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& [key, texts] : groups) {
        if (texts.size() < 2) continue;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            for (std::size_t j = 0; j < texts.size(); ++j) {
                if (i == j) continue;
                const TokenSequence ref[] = {tokens.get(texts[j])};
                sum += score_tokens(metric, tokens.get(texts[i]), ref, embedder);
                ++count;
            }
        }
    }
    if (count == 0) throw Error(ErrorCode::NoEligibleConcepts, "no concept has two accepted questions");
    return sum / static_cast<double>(count);
}

MetricReport build_metric_report(std::span<const AnnotationRecord> records, std::span<const Metric> metrics,
                                 const EmbeddingProvider* embedder) {
    MetricReport report;
    report.metrics.assign(metrics.begin(), metrics.end());
    const auto acc = acceptance_rates(records);
    for (const auto& [m, s] : acc.per_model) {
        auto& row = report.per_model[m];
        row.acceptance_rate = s.rate();
        row.judged = s.total;
    }
    auto note = [&](std::string key, const Error& e) {
        report.metadata.emplace_back(std::move(key),
                                     std::string(to_string(e.code())) + ": " + e.what());
    };
    for (Metric metric : metrics) {
        const std::string name(metric_name(metric));
        report.metadata.emplace_back("variant." + name, std::string(metric_variant(metric)));
        try {
            const auto values = model_metric_values(records, metric, embedder);
            for (auto& [m, row] : report.per_model) {
                auto it = values.find(m);
                row.metric_values[metric] =
                    it == values.end() ? std::nullopt : std::optional<double>(it->second);
            }
        } catch (const Error& e) {
            for (auto& [m, row] : report.per_model) row.metric_values[metric] = std::nullopt;
            note("model_values." + name, e);
        }
        try {
            report.upper_bound[metric] = upper_bound(records, metric, embedder);
        } catch (const Error& e) {
            report.upper_bound[metric] = std::nullopt;
            note("upper_bound." + name, e);
        }
        try {
            const auto ic = instance_correlation(records, metric, embedder);
            report.instance_corr[metric] = ic.coefficient;
            report.metadata.emplace_back("instance_corr." + name + ".excluded", std::to_string(ic.excluded));
        } catch (const Error& e) {
            report.instance_corr[metric] = std::nullopt;
            note("instance_corr." + name, e);
        }
        try {
            report.system_corr[metric] = system_correlation(records, metric, embedder).coefficient;
        } catch (const Error& e) {
            report.system_corr[metric] = std::nullopt;
            note("system_corr." + name, e);
        }
    }
    report.metadata.emplace_back("verdict_encoding", "Accept=1, Reject=0");
    report.metadata.emplace_back("references",
                                 "accepted questions of the same concept, the scored question's own text excluded");
    report.metadata.emplace_back("upper_bound", "mean over ordered pairs of accepted questions, single reference");
    report.metadata.emplace_back("system_values", "corpus BLEU for bleu, mean sentence score otherwise");
    return report;
}

}  // namespace quizgen
