#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace cvs {

/// One (image, question, answer) sample. `extra` holds any fields beyond the
/// four known ones, preserved opaquely on round-trip.
struct SampleRecord {
    std::string id;
    std::string image_path;
    std::string question;
    std::string answer;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();

    bool operator==(const SampleRecord& other) const {
        return id == other.id && image_path == other.image_path &&
               question == other.question && answer == other.answer &&
               extra == other.extra;
    }
};

struct PoolStats {
    std::size_t total_count = 0;
    std::size_t distinct_image_count = 0;
    std::size_t empty_question_count = 0;
};

struct ManifestLoadOptions {
    /// When set, every non-URI image path must exist on disk.
    bool check_images = false;
};

struct ManifestData {
    std::vector<SampleRecord> records;
    PoolStats stats;
    std::vector<std::string> warnings;
};

/// Reads a UTF-8 JSONL manifest, one {"id","image","question","answer"}
/// object per line. Records come back in file order, never deduplicated or
/// mutated. Throws DataError naming the offending line or id on malformed
/// lines, duplicate ids, and empty answers.
ManifestData load_manifest(const std::filesystem::path& path,
                           const ManifestLoadOptions& options = {});

/// Writes records as JSONL in sequence order. load_manifest(write_manifest(x))
/// reproduces x exactly, including unknown extra fields.
void write_manifest(std::span<const SampleRecord> records,
                    const std::filesystem::path& path);

}  // namespace cvs
