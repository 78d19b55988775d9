#include "shardplan/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "shardplan/io_util.hpp"

namespace shardplan {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string embedding_to_string(const std::vector<double>& e) {
    std::string out;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (i) out.push_back(';');
        out += format_double(e[i]);
    }
    return out;
}

std::optional<std::vector<double>> embedding_from_string(std::string_view s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t end = s.find(';', start);
        if (end == std::string_view::npos) end = s.size();
        auto v = parse_double(s.substr(start, end - start));
        if (!v) return std::nullopt;
        out.push_back(*v);
        start = end + 1;
        if (end == s.size()) break;
    }
    if (out.empty()) return std::nullopt;
    return out;
}

// Field-wise row parse; the returned string is the rejection message ("" = ok).
std::string record_from_fields(const std::unordered_map<std::string, std::string>& raw,
                               ClipRecord& r) {
    auto field = [&](const char* name) -> std::string_view {
        auto it = raw.find(name);
        return it == raw.end() ? std::string_view{} : std::string_view(it->second);
    };

    r.clip_id = field("clip_id");
    r.shard_id = field("shard_id");
    if (r.clip_id.empty()) return "clip_id must be nonempty";
    if (r.shard_id.empty()) return "shard_id must be nonempty";

    auto branch = branch_from_string(field("branch"));
    if (!branch) return "unknown branch value '" + std::string(field("branch")) + "'";
    r.branch = *branch;

    auto frames = parse_int(field("frames"));
    if (!frames) return "frames is not an integer";
    r.frames = *frames;
    if (r.frames < 1) return "frames must be >= 1";
    if (r.is_image() && r.frames != 1) return "image branches require frames = 1";
    if (r.is_video() && r.frames == 1) return "video branches require frames > 1";

    auto width = parse_int(field("width"));
    auto height = parse_int(field("height"));
    if (!width || *width <= 0) return "width must be a positive integer";
    if (!height || *height <= 0) return "height must be a positive integer";
    r.width = static_cast<int>(*width);
    r.height = static_cast<int>(*height);

    auto fps = parse_double(field("fps"));
    if (!fps || *fps < 0) return "fps must be a nonnegative number";
    r.fps = *fps;
    if (r.is_image() && r.fps != 0.0) return "image branches require fps = 0";
    if (r.is_video() && r.fps <= 0.0) return "video branches require fps > 0";

    auto filesize = parse_int(field("filesize_bytes"));
    if (!filesize || *filesize <= 0) return "filesize_bytes must be a positive integer";
    r.filesize_bytes = *filesize;

    r.duration_s = r.is_video() ? static_cast<double>(r.frames) / r.fps : 0.0;

    auto opt_score = [&](const char* name, std::optional<double>& out) -> std::string {
        std::string_view raw = field(name);
        if (raw.empty()) {
            out.reset();
            return {};
        }
        auto v = parse_double(raw);
        if (!v) return std::string(name) + " is not a number";
        out = *v;
        return {};
    };
    std::string err;
    if (!(err = opt_score("score_aesthetic", r.scores.aesthetic)).empty()) return err;
    if (!(err = opt_score("score_luminance", r.scores.luminance)).empty()) return err;
    if (!(err = opt_score("score_motion", r.scores.motion)).empty()) return err;
    if (!(err = opt_score("score_suitability", r.scores.suitability)).empty()) return err;
    if (!(err = opt_score("score_technical", r.scores.technical)).empty()) return err;

    auto flag = [&](const char* name, bool& out) -> std::string {
        std::string_view value = field(name);
        if (value == "true") {
            out = true;
        } else if (value == "false") {
            out = false;
        } else {
            return std::string(name) + " must be true or false";
        }
        return {};
    };
    if (!(err = flag("tag_watermark", r.tags.watermark)).empty()) return err;
    if (!(err = flag("tag_nsfw", r.tags.nsfw)).empty()) return err;
    if (!(err = flag("tag_padded", r.tags.padded)).empty()) return err;
    if (!(err = flag("tag_multi_scene", r.tags.multi_scene)).empty()) return err;
    if (!(err = flag("tag_timelapse", r.tags.timelapse)).empty()) return err;

    auto quality = quality_from_string(field("tag_quality"));
    if (!quality) return "unknown tag_quality value '" + std::string(field("tag_quality")) + "'";
    r.tags.quality = *quality;

    auto action = action_from_string(field("tag_action"));
    if (!action) return "unknown tag_action value '" + std::string(field("tag_action")) + "'";
    r.tags.action = *action;

    r.tags.style = field("style");
    r.tags.subject = field("subject");

    if (!field("embedding").empty()) {
        auto emb = embedding_from_string(field("embedding"));
        if (!emb) return "embedding is not a semicolon-separated list of numbers";
        r.embedding = std::move(*emb);
    } else {
        r.embedding.reset();
    }
    return {};
}

std::string json_row_to_fields(const std::string& line,
                               std::unordered_map<std::string, std::string>& out) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return "line is not a JSON object";
    for (auto& [key, value] : j.items()) {
        bool known = std::find_if(kManifestColumns.begin(), kManifestColumns.end(),
                                  [&](const char* c) { return key == c; }) !=
                     kManifestColumns.end();
        if (!known) return "unknown field '" + key + "'";
        if (value.is_null()) continue;
        if (value.is_string()) {
            out[key] = value.get<std::string>();
        } else if (value.is_boolean()) {
            out[key] = value.get<bool>() ? "true" : "false";
        } else if (value.is_number_integer()) {
            out[key] = std::to_string(value.get<std::int64_t>());
        } else if (value.is_number_unsigned()) {
            out[key] = std::to_string(value.get<std::uint64_t>());
        } else if (value.is_number_float()) {
            out[key] = format_double(value.get<double>());
        } else {
            return "field '" + key + "' has an unsupported JSON type";
        }
    }
    return {};
}

void finalize(Corpus& corpus) {
    corpus.shards = shards_from_records(corpus.records);
    corpus.provenance.record_count = corpus.records.size();
    corpus.rebuild_index();
}

}  // namespace

ManifestFormat manifest_format_for(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    if (ext == ".csv") return ManifestFormat::Csv;
    return ManifestFormat::Jsonl;
}

IngestResult ingest_manifest(const std::filesystem::path& path, ManifestFormat format) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open manifest: " + path.string());

    IngestResult result;
    result.corpus.provenance.source_path = path.string();
    result.corpus.provenance.checksum = file_checksum(path);

    // clip_id -> first line number, for duplicate diagnostics
    std::unordered_map<std::string, std::size_t> first_line;

    std::vector<std::string> header;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::unordered_map<std::string, std::string> fields;
        if (format == ManifestFormat::Csv) {
            auto cells = csv::split_row(line);
            if (!cells) {
                result.rejections.push_back({line_no, "malformed CSV quoting"});
                continue;
            }
            if (header.empty()) {
                header = *cells;
                for (const char* col : kManifestColumns) {
                    bool found = std::find(header.begin(), header.end(), col) != header.end();
                    bool optional_col = std::string_view(col) == "embedding";
                    if (!found && !optional_col)
                        throw IngestError("manifest " + path.string() +
                                          ": header is missing required column '" + col + "'");
                }
                for (const std::string& col : header) {
                    bool known = std::find_if(kManifestColumns.begin(), kManifestColumns.end(),
                                              [&](const char* c) { return col == c; }) !=
                                 kManifestColumns.end();
                    if (!known)
                        throw IngestError("manifest " + path.string() +
                                          ": unknown column '" + col + "'");
                }
                continue;
            }
            if (cells->size() != header.size()) {
                result.rejections.push_back(
                    {line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(cells->size())});
                continue;
            }
            for (std::size_t i = 0; i < header.size(); ++i) fields[header[i]] = (*cells)[i];
        } else {
            std::string err = json_row_to_fields(line, fields);
            if (!err.empty()) {
                result.rejections.push_back({line_no, err});
                continue;
            }
        }

        ClipRecord record;
        std::string err = record_from_fields(fields, record);
        if (!err.empty()) {
            result.rejections.push_back({line_no, err});
            continue;
        }

        auto [it, inserted] = first_line.emplace(record.clip_id, line_no);
        if (!inserted) {
            throw IngestError("manifest " + path.string() + ": duplicate clip_id '" +
                              record.clip_id + "' at lines " + std::to_string(it->second) +
                              " and " + std::to_string(line_no));
        }
        result.corpus.records.push_back(std::move(record));
    }

    finalize(result.corpus);
    return result;
}

void write_manifest(const Corpus& corpus, const std::filesystem::path& path,
                    ManifestFormat format) {
    std::ostringstream out;

    if (format == ManifestFormat::Csv) {
        std::vector<std::string> header(kManifestColumns.begin(), kManifestColumns.end());
        out << csv::join_row(header) << '\n';
    }

    for (const ClipRecord& r : corpus.records) {
        auto score_str = [](const std::optional<double>& v) {
            return v ? format_double(*v) : std::string{};
        };
        if (format == ManifestFormat::Csv) {
            // the container is line-delimited; a field with a newline could
            // never be read back
            for (const std::string* field : {&r.clip_id, &r.shard_id, &r.tags.style,
                                             &r.tags.subject}) {
                if (field->find_first_of("\r\n") != std::string::npos)
                    throw std::invalid_argument("write_manifest: clip '" + r.clip_id +
                                                "' carries a newline in a text field");
            }
            std::vector<std::string> row = {
                r.clip_id,
                r.shard_id,
                std::string(to_string(r.branch)),
                std::to_string(r.frames),
                std::to_string(r.width),
                std::to_string(r.height),
                format_double(r.fps),
                std::to_string(r.filesize_bytes),
                score_str(r.scores.aesthetic),
                score_str(r.scores.luminance),
                score_str(r.scores.motion),
                score_str(r.scores.suitability),
                score_str(r.scores.technical),
                r.tags.watermark ? "true" : "false",
                r.tags.nsfw ? "true" : "false",
                r.tags.padded ? "true" : "false",
                r.tags.multi_scene ? "true" : "false",
                r.tags.timelapse ? "true" : "false",
                std::string(to_string(r.tags.quality)),
                std::string(to_string(r.tags.action)),
                r.tags.style,
                r.tags.subject,
                r.embedding ? embedding_to_string(*r.embedding) : std::string{},
            };
            out << csv::join_row(row) << '\n';
        } else {
            ojson j;
            j["clip_id"] = r.clip_id;
            j["shard_id"] = r.shard_id;
            j["branch"] = to_string(r.branch);
            j["frames"] = r.frames;
            j["width"] = r.width;
            j["height"] = r.height;
            j["fps"] = r.fps;
            j["filesize_bytes"] = r.filesize_bytes;
            auto set_score = [&](const char* key, const std::optional<double>& v) {
                if (v) j[key] = *v; else j[key] = nullptr;
            };
            set_score("score_aesthetic", r.scores.aesthetic);
            set_score("score_luminance", r.scores.luminance);
            set_score("score_motion", r.scores.motion);
            set_score("score_suitability", r.scores.suitability);
            set_score("score_technical", r.scores.technical);
            j["tag_watermark"] = r.tags.watermark;
            j["tag_nsfw"] = r.tags.nsfw;
            j["tag_padded"] = r.tags.padded;
            j["tag_multi_scene"] = r.tags.multi_scene;
            j["tag_timelapse"] = r.tags.timelapse;
            j["tag_quality"] = to_string(r.tags.quality);
            j["tag_action"] = to_string(r.tags.action);
            j["style"] = r.tags.style;
            j["subject"] = r.tags.subject;
            if (r.embedding) j["embedding"] = embedding_to_string(*r.embedding);
            out << j.dump() << '\n';
        }
    }

    write_file(path, out.str());
}

}  // namespace shardplan
