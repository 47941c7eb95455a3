#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "quizgen/domain_json.hpp"
#include "quizgen/orchestrator.hpp"

namespace quizgen {

struct RecordLogEntry {
    std::uint64_t sequence_no = 0;
    AnnotationRecord record;
    std::string session_id;
    std::uint64_t shuffle_seed = 0;

    bool operator==(const RecordLogEntry&) const = default;
};

/// The export line shape, keys in canonical order.
Json entry_to_json(const RecordLogEntry& entry);

/// One line of the export file, without the trailing newline.
std::string encode_entry(const RecordLogEntry& entry);

/// Translates foreign top-level field names to the export schema before
/// validation. Loaded from a JSON object {"foreign": "canonical", ...}.
class FieldMapping {
public:
    FieldMapping() = default;
    explicit FieldMapping(std::map<std::string, std::string> renames);

    static FieldMapping load(const std::filesystem::path& path);

    Json apply(const Json& line) const;

private:
    std::map<std::string, std::string> renames_;
};

/// Validates one parsed line. Throws InvariantViolation(line, field).
RecordLogEntry decode_entry(const Json& j, std::size_t line);

/// Parses a whole export. Any bad line rejects the file: ParseError(line)
/// for malformed JSON, InvariantViolation(line, field) otherwise. Sequence
/// numbers must be strictly increasing.
std::vector<RecordLogEntry> parse_records(std::string_view content, const FieldMapping* mapping = nullptr);

/// Reads and parses a file. A missing file throws StorageFailure.
std::vector<RecordLogEntry> import_records(const std::filesystem::path& path, const FieldMapping* mapping = nullptr);

/// Writes the entries as line-delimited JSON.
void export_records(const std::filesystem::path& path, const std::vector<RecordLogEntry>& entries);

std::vector<AnnotationRecord> records_of(const std::vector<RecordLogEntry>& entries);

/// Append-only record log. Each append is written and fsync'ed before it
/// returns. Appends are serialized; snapshots may be taken concurrently.
class RecordStore final : public RecordSink {
public:
    /// Opens or creates the log. An existing file is validated as by
    /// import_records and numbering continues after its last entry.
    explicit RecordStore(std::filesystem::path path);
    ~RecordStore() override;

    RecordStore(const RecordStore&) = delete;
    RecordStore& operator=(const RecordStore&) = delete;

    /// Assigns the next sequence number (ignoring the one in `entry`) and
    /// returns it. Throws StorageFailure.
    std::uint64_t append(RecordLogEntry entry);

    void append(const AnnotationRecord& record, const std::string& session_id, std::uint64_t shuffle_seed) override;

    void close();
    bool is_open() const;

    const std::filesystem::path& path() const noexcept { return path_; }

    /// Prefix-consistent copy of everything appended so far.
    std::vector<RecordLogEntry> snapshot() const;

    void export_to(const std::filesystem::path& path) const;

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    int fd_ = -1;
    std::vector<RecordLogEntry> entries_;
};

// ---------------------------------------------------------------------------
// Reading material
// ---------------------------------------------------------------------------

/// Reads `text_file`, truncates it to the word limit, stores it in the
/// catalog and returns it. Throws EmptyMaterial, StorageFailure.
ReadingMaterial import_material(const Topic& topic, const std::filesystem::path& text_file, TopicCatalog& catalog,
                                std::size_t limit_words = kMaterialWordLimit);

/// Persists a topic as `<dir>/<topic id>.json`.
void save_topic(const std::filesystem::path& dir, const Topic& topic, const ReadingMaterial& material);

/// Loads every `*.json` topic file in `dir`, in file-name order.
void load_topics(const std::filesystem::path& dir, TopicCatalog& catalog);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary file and rename.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace quizgen
