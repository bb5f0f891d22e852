#include "cvs/manifest.hpp"

#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "cvs/errors.hpp"
#include "jsonl.hpp"

namespace cvs {

namespace {

using nlohmann::ordered_json;

bool looks_like_uri(const std::string& path) {
    return path.find("://") != std::string::npos;
}

std::string require_string_field(const ordered_json& obj, const char* key, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw DataError("manifest line " + std::to_string(line_no) + ": missing or non-string field \"" + key + "\"");
    }
    return it->get<std::string>();
}

}  // namespace

ManifestData load_manifest(const std::filesystem::path& path, const ManifestLoadOptions& options) {
    ManifestData data;
    std::unordered_map<std::string, std::size_t> first_line_of_id;
    std::unordered_set<std::string> images;

    detail::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        ordered_json obj = ordered_json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            throw DataError("manifest line " + std::to_string(line_no) + ": not a valid JSON object");
        }

        SampleRecord rec;
        rec.id = require_string_field(obj, "id", line_no);
        rec.image_path = require_string_field(obj, "image", line_no);
        rec.question = require_string_field(obj, "question", line_no);
        rec.answer = require_string_field(obj, "answer", line_no);
        for (auto& [key, value] : obj.items()) {
            if (key != "id" && key != "image" && key != "question" && key != "answer") {
                rec.extra[key] = value;
            }
        }

        if (rec.id.empty()) {
            throw DataError("manifest line " + std::to_string(line_no) + ": empty id");
        }
        auto [it, inserted] = first_line_of_id.emplace(rec.id, line_no);
        if (!inserted) {
            throw DataError("duplicate id \"" + rec.id + "\" at lines " +
                            std::to_string(it->second) + " and " + std::to_string(line_no));
        }
        if (detail::trim_whitespace(rec.answer).empty()) {
            throw DataError("empty answer for id \"" + rec.id + "\"");
        }
        if (rec.question.empty()) {
            ++data.stats.empty_question_count;
        }
        if (options.check_images && !looks_like_uri(rec.image_path) &&
            !std::filesystem::exists(rec.image_path)) {
            throw DataError("missing image for id \"" + rec.id + "\": " + rec.image_path);
        }

        images.insert(rec.image_path);
        data.records.push_back(std::move(rec));
    });

    data.stats.total_count = data.records.size();
    data.stats.distinct_image_count = images.size();
    if (data.stats.empty_question_count > 0) {
        data.warnings.push_back(std::to_string(data.stats.empty_question_count) +
                                " record(s) have an empty question");
    }
    return data;
}

void write_manifest(std::span<const SampleRecord> records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open manifest for writing: " + path.string());
    }
    for (const auto& rec : records) {
        ordered_json obj;
        obj["id"] = rec.id;
        obj["image"] = rec.image_path;
        obj["question"] = rec.question;
        obj["answer"] = rec.answer;
        for (auto& [key, value] : rec.extra.items()) {
            obj[key] = value;
        }
        out << obj.dump() << '\n';
    }
    out.flush();
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

}  // namespace cvs
