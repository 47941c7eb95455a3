#include "quizgen/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "quizgen/error.hpp"

namespace quizgen {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void storage_failure(const std::string& what) {
    throw Error(ErrorCode::StorageFailure, what + ": " + std::strerror(errno));
}

[[noreturn]] void violation(std::size_t line, const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvariantViolation, "line " + std::to_string(line) + ": " + field + ": " + why, line, field);
}

constexpr const char* kExportKeys[] = {"sequence_no", "annotator_id", "topic_id", "concept",
                                       "question_text", "model_ids", "verdict", "reason",
                                       "timestamp", "session_id", "shuffle_seed"};
constexpr const char* kConceptKeys[] = {"answer_text", "char_start", "char_end"};

std::uint64_t u64_field(const Json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end()) violation(line, key, "missing");
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
        violation(line, key, "expected non-negative integer");
    }
    return it->get<std::uint64_t>();
}

}  // namespace

Json entry_to_json(const RecordLogEntry& e) {
    const auto& r = e.record;
    Json models = Json::array();
    for (const auto& m : r.model_ids) models.push_back(m);
    Json j{{"sequence_no", e.sequence_no},
           {"annotator_id", r.annotator_id},
           {"topic_id", r.topic_id},
           {"concept",
            Json{{"answer_text", r.selection.answer_text},
                 {"char_start", r.selection.char_start},
                 {"char_end", r.selection.char_end}}},
           {"question_text", r.question_text},
           {"model_ids", models},
           {"verdict", label(r.judgment.verdict())}};
    if (r.judgment.reason()) j["reason"] = to_json(*r.judgment.reason());
    j["timestamp"] = format_timestamp(r.timestamp);
    j["session_id"] = e.session_id;
    j["shuffle_seed"] = e.shuffle_seed;
    return j;
}

std::string encode_entry(const RecordLogEntry& entry) {
    return entry_to_json(entry).dump(-1, ' ', false, Json::error_handler_t::strict);
}

FieldMapping::FieldMapping(std::map<std::string, std::string> renames) : renames_(std::move(renames)) {}

FieldMapping FieldMapping::load(const fs::path& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, "mapping file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "mapping file must hold a JSON object");
    std::map<std::string, std::string> renames;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_string()) throw Error(ErrorCode::ConfigError, "mapping for " + k + " must be a string");
        renames[k] = v.get<std::string>();
    }
    return FieldMapping(std::move(renames));
}

Json FieldMapping::apply(const Json& line) const {
    if (!line.is_object() || renames_.empty()) return line;
    Json out = Json::object();
    for (const auto& [k, v] : line.items()) {
        auto it = renames_.find(k);
        out[it == renames_.end() ? k : it->second] = v;
    }
    return out;
}

RecordLogEntry decode_entry(const Json& j, std::size_t line) {
    if (!j.is_object()) violation(line, "entry", "expected a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (std::find_if(std::begin(kExportKeys), std::end(kExportKeys), [&](const char* s) { return k == s; }) ==
            std::end(kExportKeys)) {
            violation(line, k, "unknown field");
        }
    }
    RecordLogEntry e;
    e.sequence_no = u64_field(j, "sequence_no", line);
    if (e.sequence_no == 0) violation(line, "sequence_no", "must be at least 1");
    e.shuffle_seed = u64_field(j, "shuffle_seed", line);
    auto sid = j.find("session_id");
    if (sid == j.end() || !sid->is_string()) violation(line, "session_id", "expected string");
    e.session_id = sid->get<std::string>();

    if (auto c = j.find("concept"); c != j.end() && c->is_object()) {
        for (const auto& [k, v] : c->items()) {
            if (std::find_if(std::begin(kConceptKeys), std::end(kConceptKeys), [&](const char* s) { return k == s; }) ==
                std::end(kConceptKeys)) {
                violation(line, "concept." + k, "unknown field");
            }
        }
    }
    if (auto m = j.find("model_ids"); m != j.end() && m->is_array()) {
        std::set<std::string> seen;
        for (const auto& id : *m) {
            if (id.is_string() && !seen.insert(id.get<std::string>()).second) {
                violation(line, "model_ids", "duplicate model id");
            }
        }
    }

    Json nested = Json::object();
    for (const char* key : {"annotator_id", "topic_id", "concept", "question_text", "model_ids", "timestamp"}) {
        if (auto it = j.find(key); it != j.end()) nested[key] = *it;
    }
    Json judgment = Json::object();
    if (auto it = j.find("verdict"); it != j.end()) judgment["verdict"] = *it;
    if (auto it = j.find("reason"); it != j.end()) judgment["reason"] = *it;
    nested["judgment"] = judgment;
    try {
        e.record = record_from_json(nested);
    } catch (const Error& err) {
        violation(line, err.field().value_or("record"), err.what());
    }
    e.record.selection.material_ref = e.record.topic_id;
    return e;
}

std::vector<RecordLogEntry> parse_records(std::string_view content, const FieldMapping* mapping) {
    std::vector<RecordLogEntry> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        ++line_no;
        const auto nl = content.find('\n', pos);
        const auto end = nl == std::string_view::npos ? content.size() : nl;
        const auto line = content.substr(pos, end - pos);
        pos = end + 1;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        if (mapping) j = mapping->apply(j);
        auto entry = decode_entry(j, line_no);
        if (!out.empty() && entry.sequence_no <= out.back().sequence_no) {
            violation(line_no, "sequence_no", "must be strictly increasing");
        }
        out.push_back(std::move(entry));
    }
    return out;
}

std::vector<RecordLogEntry> import_records(const fs::path& path, const FieldMapping* mapping) {
    return parse_records(read_file(path), mapping);
}

void export_records(const fs::path& path, const std::vector<RecordLogEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += encode_entry(e);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<AnnotationRecord> records_of(const std::vector<RecordLogEntry>& entries) {
    std::vector<AnnotationRecord> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.record);
    return out;
}

// ---------------------------------------------------------------------------
// RecordStore
// ---------------------------------------------------------------------------

RecordStore::RecordStore(fs::path path) : path_(std::move(path)) {
    if (fs::exists(path_)) entries_ = import_records(path_);
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) storage_failure("cannot open " + path_.string());
}

RecordStore::~RecordStore() {
    if (fd_ >= 0) ::close(fd_);
}

std::uint64_t RecordStore::append(RecordLogEntry entry) {
    std::lock_guard lock(mu_);
    if (fd_ < 0) throw Error(ErrorCode::StorageFailure, "record store is closed");
    entry.sequence_no = entries_.empty() ? 1 : entries_.back().sequence_no + 1;
    check_record(entry.record);
    const std::string line = encode_entry(entry) + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
        const auto n = ::write(fd_, line.data() + written, line.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            storage_failure("write to " + path_.string() + " failed");
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) storage_failure("fsync of " + path_.string() + " failed");
    entries_.push_back(std::move(entry));
    return entries_.back().sequence_no;
}

void RecordStore::append(const AnnotationRecord& record, const std::string& session_id, std::uint64_t shuffle_seed) {
    append(RecordLogEntry{0, record, session_id, shuffle_seed});
}

void RecordStore::close() {
    std::lock_guard lock(mu_);
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

bool RecordStore::is_open() const {
    std::lock_guard lock(mu_);
    return fd_ >= 0;
}

std::vector<RecordLogEntry> RecordStore::snapshot() const {
    std::lock_guard lock(mu_);
    return entries_;
}

void RecordStore::export_to(const fs::path& path) const { export_records(path, snapshot()); }

// ---------------------------------------------------------------------------
// Files and material
// ---------------------------------------------------------------------------

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) storage_failure("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) storage_failure("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) storage_failure("cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::StorageFailure, "cannot rename " + tmp.string() + ": " + ec.message());
}

ReadingMaterial import_material(const Topic& topic, const fs::path& text_file, TopicCatalog& catalog,
                                std::size_t limit_words) {
    auto material = load_material(topic, read_file(text_file), limit_words);
    catalog.put(topic, material);
    return material;
}

namespace {

void check_topic_id(const std::string& id) {
    const bool ok = !id.empty() && id.front() != '.' && std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
               c == '.';
    });
    if (!ok) throw Error(ErrorCode::PreconditionViolation, "topic id must match [A-Za-z0-9._-]+: " + id);
}

}  // namespace

void save_topic(const fs::path& dir, const Topic& topic, const ReadingMaterial& material) {
    check_topic_id(topic.id);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + dir.string() + ": " + ec.message());
    const Json j{{"topic", to_json(topic)}, {"material", to_json(material)}};
    write_file(dir / (topic.id + ".json"), j.dump(2) + "\n");
}

void load_topics(const fs::path& dir, TopicCatalog& catalog) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::StorageFailure, "not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        try {
            const auto j = Json::parse(read_file(f));
            auto topic = topic_from_json(j.at("topic"));
            auto material = material_from_json(j.at("material"));
            if (material.topic_id != topic.id) {
                throw Error(ErrorCode::InvalidRecord, "material topic_id disagrees with topic id");
            }
            catalog.put(std::move(topic), std::move(material));
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::ParseError, f.string() + ": " + e.what());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::StorageFailure) throw;
            throw Error(ErrorCode::ParseError, f.string() + ": " + e.what());
        }
    }
}

}  // namespace quizgen
