#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "gitfixture.hpp"
#include "rsimp/ingest.hpp"

using namespace rsimp;
namespace fs = std::filesystem;

namespace {

CommitEvent make_event(const std::string& sha, const std::string& message,
                       std::vector<std::string> paths,
                       std::optional<std::string> before = std::nullopt,
                       std::optional<std::string> after = std::nullopt) {
  CommitEvent e;
  e.sha = sha;
  e.message = message;
  e.changed_paths = std::move(paths);
  e.readme_before = std::move(before);
  e.readme_after = std::move(after);
  return e;
}

fs::path temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("rsimp_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("repo filters") {
    RepoMeta meta{.repo_id = "r", .stars = 10, .forks = 0, .commit_count = 100,
                  .is_fork = false};
    CHECK(repo_passes_filters(meta));
    meta.is_fork = true;
    meta.stars = 1000;
    meta.commit_count = 1000;
    CHECK_FALSE(repo_passes_filters(meta));
    meta.is_fork = false;
    meta.stars = 9;
    meta.commit_count = 100;
    CHECK_FALSE(repo_passes_filters(meta));
    meta.stars = 10;
    meta.commit_count = 99;
    CHECK_FALSE(repo_passes_filters(meta));
  }

  TEST_CASE("keyword matching with the suffix rule") {
    KeywordSet keywords;
    CHECK(keyword_match("Simplify intro paragraph", keywords) ==
          std::set<std::string>{"simplify"});
    CHECK(keyword_match("fix typo in tests", keywords).empty());
    CHECK(keyword_match("Clarifying README a bit", keywords) ==
          std::set<std::string>{"clarify"});
    // inflections within three extra characters
    CHECK(keyword_match("cleared up the wording", keywords) ==
          std::set<std::string>{"clear"});
    // four extra characters is too far
    CHECK(keyword_match("clarifyingly", keywords).empty());
    // punctuation splits words
    CHECK(keyword_match("simplify,then ship", keywords) ==
          std::set<std::string>{"simplify"});
    CHECK(keyword_match("", keywords).empty());
  }

  TEST_CASE("custom keyword set is lowercased and deduplicated") {
    KeywordSet ks({"Foo", "foo", "BAR"});
    CHECK(ks.words() == std::vector<std::string>{"foo", "bar"});
    CHECK(keyword_match("FOO everywhere", ks) == std::set<std::string>{"foo"});
  }

  TEST_CASE("simplification commit detection") {
    KeywordSet keywords;
    CHECK(is_simplification_commit(
        make_event("a", "Clarify README", {"README.md"}), keywords));
    CHECK_FALSE(is_simplification_commit(
        make_event("a", "Clarify docs", {"README.md", "src/main.c"}), keywords));
    CHECK_FALSE(is_simplification_commit(
        make_event("a", "bump version", {"README.md"}), keywords));
    // README naming is case-insensitive, prefix-based, any directory
    CHECK(is_simplification_commit(
        make_event("a", "Simplify", {"docs/ReadMe.rst"}), keywords));
  }

  TEST_CASE("harvest keeps the first and last qualifying commit") {
    KeywordSet keywords;
    RepoMeta meta{.repo_id = "r", .stars = 50, .forks = 1, .commit_count = 200,
                  .is_fork = false, .language = "C"};
    std::vector<CommitEvent> history = {
        make_event("s1", "initial import", {"README.md", "main.c"}),
        make_event("s2", "Simplify intro", {"README.md"}, "v1", "v2"),
        make_event("s3", "add feature", {"main.c"}),
        make_event("s4", "Clarifying wording", {"README.md"}, "v2", "v3"),
        make_event("s5", "Explained usage", {"README.md"}, "v3", "v4"),
    };

    auto pairs = harvest_repo(meta, history, keywords);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].sha == "s2");
    CHECK(pairs[1].sha == "s5");  // middle qualifying commit s4 skipped
    CHECK(pairs[0].difficult_doc == "v1");
    CHECK(pairs[0].simple_doc == "v2");
    CHECK(pairs[0].matched_keywords == std::set<std::string>{"simplify"});
    CHECK(pairs[0].stars == 50);
    CHECK(pairs[0].language == "C");

    SUBCASE("single qualifying commit gives one pair") {
      auto one = harvest_repo(meta, {history[0], history[1]}, keywords);
      REQUIRE(one.size() == 1);
      CHECK(one[0].sha == "s2");
    }
    SUBCASE("nothing qualifies") {
      CHECK(harvest_repo(meta, {history[0], history[2]}, keywords).empty());
    }
    SUBCASE("failing repo filters skips the repo entirely") {
      RepoMeta fork = meta;
      fork.is_fork = true;
      CHECK(harvest_repo(fork, history, keywords).empty());
    }
    SUBCASE("missing or identical README versions never pair") {
      auto h2 = history;
      h2[1].readme_before = std::nullopt;
      h2[3].readme_before = "same";
      h2[3].readme_after = "same";
      auto got = harvest_repo(meta, h2, keywords);
      REQUIRE(got.size() == 1);
      CHECK(got[0].sha == "s5");
    }
  }

  TEST_CASE("pair JSONL round trip") {
    const auto dir = temp_dir("ingest_jsonl");
    const std::string path = (dir / "pairs.jsonl").string();

    std::vector<DocumentPair> pairs;
    for (int i = 0; i < 5; ++i) {
      DocumentPair p;
      p.repo_id = "repo" + std::to_string(i);
      p.sha = "sha" + std::to_string(i);
      p.matched_keywords = {"simplify"};
      p.commit_message = "Simplify \"quoted\" text\nsecond line";
      if (i % 2 == 0) p.language = "C++";
      p.forks = i;
      p.stars = 10 + i;
      p.difficult_doc = "hard\nversion " + std::to_string(i);
      p.simple_doc = "easy version " + std::to_string(i);
      pairs.push_back(p);
    }
    store_pairs(pairs, path);
    CHECK(load_pairs(path) == pairs);

    SUBCASE("empty file loads as empty") {
      write_file(path, "");
      CHECK(load_pairs(path).empty());
    }
    SUBCASE("missing field is reported by name") {
      write_file(path, "{\"repo_id\":\"x\",\"sha\":\"y\"}\n");
      CHECK_THROWS_WITH_AS(load_pairs(path),
                           doctest::Contains("matched_keywords"),
                           std::runtime_error);
    }
    SUBCASE("malformed line is reported by number") {
      write_file(path, "{\"repo_id\"\n");
      CHECK_THROWS_WITH_AS(load_pairs(path), doctest::Contains(":1:"),
                           std::runtime_error);
    }
    fs::remove_all(dir);
  }

  TEST_CASE("scanning a directory of git repositories") {
    const auto root = temp_dir("ingest_git");
    gitfixture::make_repo(root, 0);   // 3 qualifying commits -> 2 pairs
    gitfixture::make_repo(root, 1);   // 1 qualifying commit -> 1 pair
    gitfixture::make_repo(root, 2, /*stars=*/3);  // excluded: stars
    fs::create_directories(root / "not_a_repo");

    HarvestFilters filters{.min_stars = 10, .min_commits = 3};
    std::vector<std::string> warnings;
    auto pairs = scan_git_directory(root.string(), KeywordSet(), filters, &warnings);

    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0].repo_id == "proj0");
    CHECK(pairs[1].repo_id == "proj0");
    CHECK(pairs[2].repo_id == "proj1");
    CHECK(pairs[0].sha != pairs[1].sha);
    for (const auto& p : pairs) {
      CHECK(p.difficult_doc != p.simple_doc);
      CHECK_FALSE(p.matched_keywords.empty());
      CHECK(p.language == "C");
    }
    // first/last selection: proj0 pairs are versions 0->1 and 2->3 in some
    // sha order (output sorts by (repo_id, sha), not chronology)
    std::set<std::pair<std::string, std::string>> got = {
        {pairs[0].difficult_doc, pairs[0].simple_doc},
        {pairs[1].difficult_doc, pairs[1].simple_doc}};
    std::set<std::pair<std::string, std::string>> want = {
        {gitfixture::readme_text("proj0", 0), gitfixture::readme_text("proj0", 1)},
        {gitfixture::readme_text("proj0", 2), gitfixture::readme_text("proj0", 3)}};
    CHECK(got == want);

    SUBCASE("deterministic across rescans") {
      auto again = scan_git_directory(root.string(), KeywordSet(), filters);
      CHECK(again == pairs);
    }
    SUBCASE("commit threshold excludes short histories") {
      HarvestFilters strict{.min_stars = 10, .min_commits = 50};
      CHECK(scan_git_directory(root.string(), KeywordSet(), strict).empty());
    }
    SUBCASE("empty directory") {
      const auto empty = temp_dir("ingest_empty");
      CHECK(scan_git_directory(empty.string(), KeywordSet(), filters).empty());
      fs::remove_all(empty);
    }
    fs::remove_all(root);
  }
}
