#include <set>

#include <doctest.h>

#include "gemcl/episodes.hpp"
#include "gemcl/manifest.hpp"
#include "test_util.hpp"

using namespace gemcl;

namespace {

// language x words x (train/dev/test clip counts); every clip valid unless
// invalid_every > 0, in which case every invalid_every-th clip is flagged.
Manifest toy_manifest(const std::vector<std::string>& languages, int n_words, int n_train,
                      int n_dev, int n_test, int invalid_every = 0) {
  Manifest m;
  int counter = 0;
  for (const auto& lang : languages) {
    for (int w = 0; w < n_words; ++w) {
      std::string word = "word" + std::to_string(w);
      auto add = [&](const std::string& split, int count) {
        for (int i = 0; i < count; ++i) {
          ManifestRecord rec;
          rec.clip_path = lang + "/" + word + "/" + split + std::to_string(i) + ".wav";
          rec.word = word;
          rec.language = lang;
          rec.split = split;
          rec.valid = invalid_every == 0 || (++counter % invalid_every) != 0;
          rec.duration_s = 1.0;
          rec.speaker = "spk" + std::to_string(i);
          m.records.push_back(std::move(rec));
        }
      };
      add("train", n_train);
      add("dev", n_dev);
      add("test", n_test);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("ingest parses the MSWC splits format") {
  testutil::TempDir tmp("mswc");
  std::string path = tmp.path("en_splits.csv");
  testutil::write_text(path,
                       "SET,LINK,WORD,VALID,SPEAKER,GENDER\n"
                       "TRAIN,aachen/a1.opus,aachen,TRUE,s1,m\n"
                       "DEV,aachen/a2.opus,aachen,TRUE,s2,f\n"
                       "TEST,aachen/a3.opus,aachen,FALSE,s3,m\n");
  Manifest m = ingest(path, ManifestFormat::mswc_splits_csv);
  REQUIRE(m.records.size() == 3);
  CHECK(m.records[0].language == "en");  // from the file name
  CHECK(m.records[0].split == "train");
  CHECK(m.records[1].split == "dev");
  CHECK(m.records[2].valid == false);
  CHECK(m.records[0].duration_s == 1.0);

  SUBCASE("missing column") {
    std::string bad = tmp.path("de_splits.csv");
    testutil::write_text(bad, "SET,LINK,WORD,SPEAKER,GENDER\nTRAIN,x,y,s,m\n");
    CHECK_THROWS_WITH_AS(ingest(bad, ManifestFormat::mswc_splits_csv),
                         doctest::Contains("missing column 'valid'"), std::runtime_error);
  }

  SUBCASE("unknown split label") {
    std::string bad = tmp.path("fr_splits.csv");
    testutil::write_text(bad,
                         "SET,LINK,WORD,VALID,SPEAKER,GENDER\nVALIDATION,x,y,TRUE,s,m\n");
    CHECK_THROWS_WITH_AS(ingest(bad, ManifestFormat::mswc_splits_csv),
                         doctest::Contains("unknown split label"), std::runtime_error);
  }

  SUBCASE("duplicate clip path names the offender") {
    std::string bad = tmp.path("ca_splits.csv");
    testutil::write_text(bad,
                         "SET,LINK,WORD,VALID,SPEAKER,GENDER\n"
                         "TRAIN,dup/a.opus,w,TRUE,s,m\n"
                         "TEST,dup/a.opus,w,TRUE,s,m\n");
    CHECK_THROWS_WITH_AS(ingest(bad, ManifestFormat::mswc_splits_csv),
                         doctest::Contains("dup/a.opus"), std::runtime_error);
  }
}

TEST_CASE("ingest parses the generic manifest format and json round-trips") {
  testutil::TempDir tmp("generic");
  std::string path = tmp.path("toy.csv");
  testutil::write_text(path,
                       "clip_path,word,language,split,valid,duration_s,speaker\n"
                       "en/hey/1.wav,hey,en,train,true,1.0,s1\n"
                       "en/hey/2.wav,hey,en,test,true,0.8,s2\n"
                       "en/hey/3.wav,hey,en,dev,false,,s3\n");
  Manifest m = ingest(path, ManifestFormat::generic_manifest_csv);
  REQUIRE(m.records.size() == 3);
  CHECK(m.records[1].duration_s == 0.8);
  CHECK(m.records[2].duration_s == 1.0);  // empty -> default
  CHECK(m.records[2].valid == false);

  std::string json_path = tmp.path("manifest.json");
  save_manifest_json(json_path, m);
  Manifest r = load_manifest(json_path);
  REQUIRE(r.records.size() == 3);
  CHECK(r.records[1].clip_path == m.records[1].clip_path);
  CHECK(r.records[1].duration_s == m.records[1].duration_s);
}

TEST_CASE("eligible_words needs five valid clips on both sides") {
  Manifest m = toy_manifest({"en"}, 1, 5, 1, 5);
  // word with 10 valid train but only 4 valid test
  for (int i = 0; i < 10; ++i) {
    ManifestRecord rec;
    rec.clip_path = "en/short/train" + std::to_string(i) + ".wav";
    rec.word = "short";
    rec.language = "en";
    rec.split = "train";
    m.records.push_back(rec);
  }
  for (int i = 0; i < 4; ++i) {
    ManifestRecord rec;
    rec.clip_path = "en/short/test" + std::to_string(i) + ".wav";
    rec.word = "short";
    rec.language = "en";
    rec.split = "test";
    m.records.push_back(rec);
  }
  CorpusIndex index = CorpusIndex::build(m);
  auto words = eligible_words(index, "en");
  CHECK(words == std::vector<std::string>{"word0"});  // boundary 5/5 passes, 10/4 fails

  SUBCASE("unknown language throws") {
    CHECK_THROWS_WITH_AS(eligible_words(index, "zz"), doctest::Contains("unknown language"),
                         std::runtime_error);
  }

  SUBCASE("language with no eligible words yields an empty set") {
    Manifest none = toy_manifest({"xx"}, 3, 2, 0, 2);  // too few clips everywhere
    CorpusIndex idx2 = CorpusIndex::build(none);
    CHECK(eligible_words(idx2, "xx").empty());
  }

  SUBCASE("adding valid clips never removes a word") {
    Manifest grown = m;
    for (int i = 0; i < 5; ++i) {
      ManifestRecord rec;
      rec.clip_path = "en/short/testx" + std::to_string(i) + ".wav";
      rec.word = "short";
      rec.language = "en";
      rec.split = "test";
      grown.records.push_back(rec);
    }
    auto grown_words = eligible_words(CorpusIndex::build(grown), "en");
    for (const auto& w : words)
      CHECK(std::find(grown_words.begin(), grown_words.end(), w) != grown_words.end());
    CHECK(grown_words.size() == 2);
  }
}

TEST_CASE("meta split is a seeded 70:30 partition") {
  std::vector<std::string> ten;
  for (int i = 0; i < 10; ++i) ten.push_back("w" + std::to_string(i));

  LanguageSplit s = make_meta_split(ten, 4);
  CHECK(s.meta_train.size() == 7);
  CHECK(s.meta_test.size() == 3);

  LanguageSplit again = make_meta_split(ten, 4);
  CHECK(s.meta_train == again.meta_train);
  CHECK(s.meta_test == again.meta_test);

  LanguageSplit other = make_meta_split(ten, 5);
  CHECK(s.meta_train != other.meta_train);

  SUBCASE("partition covers the pool exactly") {
    std::set<std::string> all(s.meta_train.begin(), s.meta_train.end());
    all.insert(s.meta_test.begin(), s.meta_test.end());
    CHECK(all.size() == 10);
  }

  SUBCASE("ceil rule at Catalan size") {
    std::vector<std::string> big;
    for (int i = 0; i < 4608; ++i) big.push_back("w" + std::to_string(i));
    LanguageSplit bs = make_meta_split(big, 1);
    CHECK(bs.meta_train.size() == 3226);
    CHECK(bs.meta_test.size() == 1382);
  }

  SUBCASE("too few words") {
    CHECK_THROWS_AS(make_meta_split({"only"}, 0), std::runtime_error);
  }

  SUBCASE("json round trip") {
    testutil::TempDir tmp("split");
    MetaSplit split;
    split.languages["en"] = s;
    std::string path = tmp.path("split.json");
    save_meta_split_json(path, split);
    MetaSplit r = load_meta_split_json(path);
    CHECK(r.languages.at("en").meta_train == s.meta_train);
    CHECK(r.languages.at("en").seed == 4);
  }
}

TEST_CASE("language eligibility for 25-way evaluation") {
  Manifest enough = toy_manifest({"en"}, 25, 5, 0, 5);
  CHECK(language_eligible_for_eval(CorpusIndex::build(enough), "en"));
  Manifest short_one = toy_manifest({"en"}, 24, 5, 0, 5);
  CHECK_FALSE(language_eligible_for_eval(CorpusIndex::build(short_one), "en"));
  Manifest empty = toy_manifest({"de"}, 0, 0, 0, 0);
  CHECK_FALSE(language_eligible_for_eval(CorpusIndex::build(empty), "en"));
}

TEST_CASE("episode sampling is deterministic and split-disjoint") {
  Manifest m = toy_manifest({"en"}, 30, 6, 1, 5);
  CorpusIndex index = CorpusIndex::build(m);
  auto pool = eligible_words(index, "en");
  SamplerConfig cfg;
  cfg.n_way = 5;
  cfg.k_shot = 5;
  cfg.q_queries = 5;
  cfg.seed = 2024;

  EpisodeSelection a = select_episode(index, pool, cfg, "en", 3);
  EpisodeSelection b = select_episode(index, pool, cfg, "en", 3);
  REQUIRE(a.classes.size() == 5);
  for (int c = 0; c < 5; ++c) {
    CHECK(a.classes[c].word == b.classes[c].word);
    CHECK(a.classes[c].support == b.classes[c].support);
    CHECK(a.classes[c].query == b.classes[c].query);
  }

  SUBCASE("distinct words, distinct clips, support from train, query from test") {
    std::set<std::string> words;
    for (const auto& cls : a.classes) {
      words.insert(cls.word);
      std::set<int> support(cls.support.begin(), cls.support.end());
      std::set<int> query(cls.query.begin(), cls.query.end());
      CHECK(support.size() == 5);
      CHECK(query.size() == 5);
      for (int idx : cls.support) CHECK(m.records[idx].split == "train");
      for (int idx : cls.query) CHECK(m.records[idx].split == "test");
    }
    CHECK(words.size() == 5);
  }

  SUBCASE("a unique-episode corpus gives the only possible episode") {
    Manifest tight = toy_manifest({"fr"}, 25, 5, 0, 5);
    CorpusIndex tidx = CorpusIndex::build(tight);
    auto tpool = eligible_words(tidx, "fr");
    SamplerConfig tcfg;
    tcfg.seed = 9;
    EpisodeSelection sel = select_episode(tidx, tpool, tcfg, "fr", 0);
    std::set<std::string> words;
    int clip_count = 0;
    for (const auto& cls : sel.classes) {
      words.insert(cls.word);
      clip_count += static_cast<int>(cls.support.size() + cls.query.size());
    }
    CHECK(words.size() == 25);
    CHECK(clip_count == 250);
  }

  SUBCASE("pool exhaustion errors") {
    std::vector<std::string> small(pool.begin(), pool.begin() + 3);
    CHECK_THROWS_WITH_AS(select_episode(index, small, cfg, "en", 0),
                         doctest::Contains("pool exhausted"), std::runtime_error);
  }

  SUBCASE("different indices give different word sets almost surely") {
    Manifest big = toy_manifest({"de"}, 1000, 5, 0, 5);
    CorpusIndex bidx = CorpusIndex::build(big);
    auto bpool = eligible_words(bidx, "de");
    SamplerConfig bcfg;
    bcfg.n_way = 5;
    bcfg.seed = 123;
    int identical = 0;
    for (int pair = 0; pair < 100; ++pair) {
      auto s1 = select_episode(bidx, bpool, bcfg, "de", 2 * pair);
      auto s2 = select_episode(bidx, bpool, bcfg, "de", 2 * pair + 1);
      std::set<std::string> w1, w2;
      for (const auto& c : s1.classes) w1.insert(c.word);
      for (const auto& c : s2.classes) w2.insert(c.word);
      if (w1 == w2) ++identical;
    }
    CHECK(identical == 0);
  }
}

TEST_CASE("corpus episode source loads features through the loader") {
  Manifest m = toy_manifest({"en"}, 10, 5, 0, 5);
  CorpusIndex index = CorpusIndex::build(m);
  SamplerConfig cfg;
  cfg.n_way = 3;
  cfg.k_shot = 2;
  cfg.q_queries = 2;
  cfg.seed = 5;
  std::map<std::string, std::vector<std::string>> pools{{"en", eligible_words(index, "en")}};
  int loads = 0;
  FeatureLoader loader = [&](const ManifestRecord& rec) {
    ++loads;
    FeatureMatrix f;
    f.rows = 1;
    f.cols = 4;
    f.data = {1.0, 2.0, 3.0, 4.0};
    f.sample_id = rec.clip_path;
    return f;
  };
  CorpusEpisodeSource source(m, index, pools, cfg, loader);
  Episode ep = source.make_episode("en", 0);
  CHECK(ep.classes.size() == 3);
  CHECK(ep.classes[0].support.size() == 2);
  CHECK(loads == 12);

  SUBCASE("construction rejects too-small pools") {
    SamplerConfig wide = cfg;
    wide.n_way = 11;
    CHECK_THROWS_WITH_AS(CorpusEpisodeSource(m, index, pools, wide, loader),
                         doctest::Contains("language en"), std::runtime_error);
  }

  SUBCASE("identical support and query split is rejected") {
    SamplerConfig same = cfg;
    same.query_split = "train";
    CorpusEpisodeSource src(m, index, pools, same, loader);
    CHECK_THROWS_AS(src.make_episode("en", 0), std::invalid_argument);
  }
}

TEST_CASE("unique-hours simulation counts distinct clips") {
  Manifest m = toy_manifest({"en"}, 25, 5, 0, 5);  // exactly one possible episode
  CorpusIndex index = CorpusIndex::build(m);
  std::map<std::string, std::vector<std::string>> pools{{"en", eligible_words(index, "en")}};
  SamplerConfig cfg;
  cfg.seed = 31;
  BatchComposition comp{{{"en", 1}}};

  SUBCASE("single step is bounded by clips drawn, equality without repeats") {
    HoursSimResult r = simulate_unique_hours(m, index, pools, comp, cfg, 1, 3);
    for (double h : r.per_run_hours) CHECK(h == doctest::Approx(250.0 / 3600.0).epsilon(1e-12));
  }

  SUBCASE("saturates at the total corpus duration") {
    // 250 clips of 1 s (dev absent): ceiling is the valid train+test pool
    HoursSimResult r = simulate_unique_hours(m, index, pools, comp, cfg, 50, 2);
    for (double h : r.per_run_hours) CHECK(h == doctest::Approx(250.0 / 3600.0).epsilon(1e-12));
  }

  SUBCASE("distinct seeds, reported mean") {
    Manifest big = toy_manifest({"en"}, 60, 6, 0, 6);
    CorpusIndex bidx = CorpusIndex::build(big);
    std::map<std::string, std::vector<std::string>> bpools{{"en", eligible_words(bidx, "en")}};
    SamplerConfig bcfg;
    bcfg.n_way = 10;
    bcfg.seed = 7;
    HoursSimResult r = simulate_unique_hours(big, bidx, bpools, comp, bcfg, 3, 4);
    REQUIRE(r.per_run_hours.size() == 4);
    double sum = 0.0;
    for (double h : r.per_run_hours) sum += h;
    CHECK(r.mean_hours == doctest::Approx(sum / 4.0).epsilon(1e-12));
    // runs see different clip sets with overwhelming probability
    bool any_diff = false;
    for (double h : r.per_run_hours)
      if (h != r.per_run_hours[0]) any_diff = true;
    CHECK(any_diff);
  }
}
