#include "gemcl/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gemcl {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Minimal CSV field splitter with double-quote support.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string canonical_split(const std::string& raw, const std::string& path, int line_no) {
  std::string s = lower(trim(raw));
  if (s == "train" || s == "dev" || s == "test") return s;
  throw std::runtime_error("unknown split label '" + raw + "' at " + path + ":" +
                           std::to_string(line_no));
}

bool parse_bool(const std::string& raw, const std::string& path, int line_no) {
  std::string s = lower(trim(raw));
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::runtime_error("bad boolean '" + raw + "' at " + path + ":" +
                           std::to_string(line_no));
}

std::string filename_stem(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = name.find('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return name;
}

std::string language_from_filename(const std::string& path) {
  std::string stem = filename_stem(path);
  std::size_t us = stem.find('_');
  return us == std::string::npos ? stem : stem.substr(0, us);
}

std::map<std::string, int> header_index(const std::vector<std::string>& header,
                                        const std::vector<std::string>& required,
                                        const std::string& path) {
  std::map<std::string, int> idx;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) idx[lower(trim(header[i]))] = i;
  for (const auto& col : required)
    if (!idx.count(col))
      throw std::runtime_error("missing column '" + col + "' in " + path);
  return idx;
}

void check_duplicates(const Manifest& manifest) {
  std::set<std::string> seen;
  for (const auto& rec : manifest.records)
    if (!seen.insert(rec.clip_path).second)
      throw std::runtime_error("duplicate clip path: " + rec.clip_path);
}

Manifest ingest_mswc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string language = language_from_filename(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
  auto idx = header_index(split_csv(line), {"set", "link", "word", "valid", "speaker", "gender"},
                          path);

  Manifest manifest;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() < 6)
      throw std::runtime_error("short row at " + path + ":" + std::to_string(line_no));
    ManifestRecord rec;
    rec.clip_path = trim(fields[idx["link"]]);
    rec.word = trim(fields[idx["word"]]);
    rec.language = language;
    rec.split = canonical_split(fields[idx["set"]], path, line_no);
    rec.valid = parse_bool(fields[idx["valid"]], path, line_no);
    rec.speaker = trim(fields[idx["speaker"]]);
    rec.duration_s = 1.0;  // MSWC clips are one second
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

Manifest ingest_generic(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
  auto idx = header_index(
      split_csv(line),
      {"clip_path", "word", "language", "split", "valid", "duration_s", "speaker"}, path);

  Manifest manifest;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() < 7)
      throw std::runtime_error("short row at " + path + ":" + std::to_string(line_no));
    ManifestRecord rec;
    rec.clip_path = trim(fields[idx["clip_path"]]);
    rec.word = trim(fields[idx["word"]]);
    rec.language = trim(fields[idx["language"]]);
    rec.split = canonical_split(fields[idx["split"]], path, line_no);
    rec.valid = parse_bool(fields[idx["valid"]], path, line_no);
    std::string dur = trim(fields[idx["duration_s"]]);
    rec.duration_s = dur.empty() ? 1.0 : std::stod(dur);
    rec.speaker = trim(fields[idx["speaker"]]);
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

}  // namespace

Manifest ingest(const std::string& path, ManifestFormat format) {
  Manifest manifest = format == ManifestFormat::mswc_splits_csv ? ingest_mswc(path)
                                                                : ingest_generic(path);
  check_duplicates(manifest);
  return manifest;
}

Manifest ingest_all(const std::vector<std::string>& paths, ManifestFormat format) {
  Manifest merged;
  for (const auto& path : paths) {
    Manifest part = ingest(path, format);
    merged.records.insert(merged.records.end(),
                          std::make_move_iterator(part.records.begin()),
                          std::make_move_iterator(part.records.end()));
  }
  check_duplicates(merged);
  return merged;
}

void save_manifest_json(const std::string& path, const Manifest& manifest) {
  nlohmann::json j;
  j["records"] = nlohmann::json::array();
  for (const auto& rec : manifest.records) {
    j["records"].push_back({{"clip_path", rec.clip_path},
                            {"word", rec.word},
                            {"language", rec.language},
                            {"split", rec.split},
                            {"valid", rec.valid},
                            {"duration_s", rec.duration_s},
                            {"speaker", rec.speaker}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

Manifest load_manifest(const std::string& path) {
  if (path.size() > 4 && lower(path.substr(path.size() - 4)) == ".csv")
    return ingest(path, ManifestFormat::generic_manifest_csv);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  Manifest manifest;
  for (const auto& r : j.at("records")) {
    ManifestRecord rec;
    rec.clip_path = r.at("clip_path").get<std::string>();
    rec.word = r.at("word").get<std::string>();
    rec.language = r.at("language").get<std::string>();
    rec.split = r.at("split").get<std::string>();
    rec.valid = r.at("valid").get<bool>();
    rec.duration_s = r.at("duration_s").get<double>();
    rec.speaker = r.at("speaker").get<std::string>();
    manifest.records.push_back(std::move(rec));
  }
  check_duplicates(manifest);
  return manifest;
}

CorpusIndex CorpusIndex::build(const Manifest& manifest) {
  CorpusIndex index;
  index.manifest = &manifest;
  for (int i = 0; i < static_cast<int>(manifest.records.size()); ++i) {
    const ManifestRecord& rec = manifest.records[i];
    auto& words = index.languages[rec.language];  // language known even if nothing is eligible
    if (!rec.valid) continue;
    WordClips& wc = words[rec.word];
    if (rec.split == "train")
      wc.train.push_back(i);
    else if (rec.split == "test")
      wc.test.push_back(i);
    // dev clips are never sampled
  }
  for (auto& [lang, words] : index.languages) {
    for (auto& [word, wc] : words) {
      auto by_path = [&](int a, int b) {
        return manifest.records[a].clip_path < manifest.records[b].clip_path;
      };
      std::sort(wc.train.begin(), wc.train.end(), by_path);
      std::sort(wc.test.begin(), wc.test.end(), by_path);
    }
  }
  return index;
}

bool CorpusIndex::has_language(const std::string& language) const {
  return languages.count(language) > 0;
}

std::vector<std::string> eligible_words(const CorpusIndex& index, const std::string& language,
                                        int min_support, int min_query) {
  auto it = index.languages.find(language);
  if (it == index.languages.end()) throw std::runtime_error("unknown language: " + language);
  std::vector<std::string> words;
  for (const auto& [word, wc] : it->second)
    if (static_cast<int>(wc.train.size()) >= min_support &&
        static_cast<int>(wc.test.size()) >= min_query)
      words.push_back(word);
  return words;  // std::map iteration keeps these sorted
}

}  // namespace gemcl
