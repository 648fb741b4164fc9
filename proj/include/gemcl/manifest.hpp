#pragma once

#include <map>
#include <string>
#include <vector>

namespace gemcl {

struct ManifestRecord {
  std::string clip_path;
  std::string word;
  std::string language;
  std::string split;  // train | dev | test
  bool valid = true;
  double duration_s = 1.0;
  std::string speaker;
};

struct Manifest {
  std::vector<ManifestRecord> records;
};

enum class ManifestFormat { mswc_splits_csv, generic_manifest_csv };

// Parses one CSV into a normalized manifest. For the MSWC splits format
// (SET,LINK,WORD,VALID,SPEAKER,GENDER) the language is taken from the file
// name's leading token, e.g. en_splits.csv -> "en". Dev rows are retained;
// they are simply never sampled.
Manifest ingest(const std::string& path, ManifestFormat format);

// Ingests several files and merges them; duplicate clip paths are an error.
Manifest ingest_all(const std::vector<std::string>& paths, ManifestFormat format);

void save_manifest_json(const std::string& path, const Manifest& manifest);

// Loads a manifest from its JSON form, or from a generic manifest CSV when
// the file extension is .csv.
Manifest load_manifest(const std::string& path);

// Per-word clip lists (record indices into the manifest), restricted to
// valid clips, sorted by clip path. Built once after ingest.
struct WordClips {
  std::vector<int> train;
  std::vector<int> test;
};

struct CorpusIndex {
  const Manifest* manifest = nullptr;
  std::map<std::string, std::map<std::string, WordClips>> languages;

  static CorpusIndex build(const Manifest& manifest);
  bool has_language(const std::string& language) const;
};

// Words with at least min_support valid train clips and min_query valid
// test clips. Sorted; throws on an unknown language.
std::vector<std::string> eligible_words(const CorpusIndex& index, const std::string& language,
                                        int min_support = 5, int min_query = 5);

}  // namespace gemcl
