#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "avk/corpus.hpp"
#include "avk/dataprep.hpp"
#include "avk/rng.hpp"

using namespace avk;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("avk_test_" + name) {
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("tokenize lowercases, splits on whitespace, strips edge punctuation") {
    CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
    CHECK(tokenize("  a\tb\nc ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
    CHECK(tokenize("!!! ???") == std::vector<std::string>{});
    CHECK(tokenize("") == std::vector<std::string>{});
}

TEST_CASE("tokenization is idempotent on its own output") {
    const std::vector<std::string> docs = {
        "Hi, do suit bags count as personal items?",
        "TRYING all day... to book an int'l flight!",
        "delay detroit < orlando",
    };
    for (const std::string& doc : docs) {
        const std::vector<std::string> once = tokenize(doc);
        std::string joined;
        for (const std::string& tok : once) joined += tok + " ";
        CHECK(tokenize(joined) == once);
    }
}

TEST_CASE("load_corpus maps the jsonl schema") {
    TempFile file("corpus_ok.jsonl",
                  R"({"id": "a", "view1": "Hello world", "view2": ["ok then", "bye"]})"
                  "\n"
                  R"({"id": "b", "view1": "second one", "view2": [], "label": "x"})"
                  "\n");
    const Corpus corpus = load_corpus(file.path);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus.instances[0].id == "a");
    CHECK(corpus.instances[0].query.tokens.size() == 2);
    CHECK(corpus.instances[0].content.size() == 2);
    CHECK_FALSE(corpus.instances[0].degenerate_content);
    CHECK(corpus.instances[0].gold_label == -1);
    CHECK(corpus.instances[1].degenerate_content);
    CHECK(corpus.instances[1].gold_label == 0);
    CHECK(corpus.gold_cluster_count == 1);
    // vocabulary ids are dense and assigned in first-appearance order
    CHECK(corpus.vocab.size() == 7);  // unk + hello world ok then bye second one
    CHECK(corpus.vocab.id_or_unk("hello") == 1);
    CHECK(corpus.vocab.id_or_unk("never-seen") == Vocabulary::kUnkId);
}

TEST_CASE("load_corpus rejects malformed lines with the line number") {
    TempFile file("corpus_bad.jsonl",
                  R"({"id": "a", "view1": "fine", "view2": []})"
                  "\n"
                  R"({"id": "b", "view2": []})"
                  "\n");
    CHECK_THROWS_WITH_AS(load_corpus(file.path), doctest::Contains(":2"), DataError);
}

TEST_CASE("load_corpus rejects duplicate ids naming the duplicate") {
    TempFile file("corpus_dup.jsonl",
                  R"({"id": "same", "view1": "one", "view2": []})"
                  "\n"
                  R"({"id": "same", "view1": "two", "view2": []})"
                  "\n");
    CHECK_THROWS_WITH_AS(load_corpus(file.path), doctest::Contains("same"), DataError);
}

TEST_CASE("empty query views are rejected and counted") {
    TempFile file("corpus_empty_q.jsonl",
                  R"({"id": "a", "view1": "???", "view2": ["kept content"]})"
                  "\n"
                  R"({"id": "b", "view1": "fine", "view2": []})"
                  "\n");
    const Corpus corpus = load_corpus(file.path);
    CHECK(corpus.size() == 1);
    CHECK(corpus.rejected_empty_query == 1);
    CHECK(corpus.instances[0].id == "b");
}

TEST_CASE("vocabulary ids are stable across two loads of the same file") {
    const std::vector<RawInstance> raws = generate_synthetic({});
    TempFile file("corpus_stable.jsonl", corpus_jsonl_string(raws));
    const Corpus first = load_corpus(file.path);
    const Corpus second = load_corpus(file.path);
    REQUIRE(first.vocab.size() == second.vocab.size());
    for (int id = 0; id < first.vocab.size(); ++id)
        CHECK(first.vocab.word(id) == second.vocab.word(id));
}

TEST_CASE("make_dev_split partitions deterministically") {
    SyntheticSpec spec;
    spec.n = 10;
    spec.k = 2;
    const Corpus corpus = build_corpus(generate_synthetic(spec));

    auto [train, dev] = make_dev_split(corpus, 0.1, 42);
    CHECK(train.size() == 9);
    CHECK(dev.size() == 1);

    auto [train2, dev2] = make_dev_split(corpus, 0.1, 42);
    CHECK(train == train2);
    CHECK(dev == dev2);

    std::set<int> all(train.begin(), train.end());
    all.insert(dev.begin(), dev.end());
    CHECK(all.size() == 10);
}

TEST_CASE("make_dev_split rounds half away from zero") {
    SyntheticSpec spec;
    spec.n = 3;
    spec.k = 2;
    const Corpus corpus = build_corpus(generate_synthetic(spec));
    auto [train, dev] = make_dev_split(corpus, 0.5, 1);
    CHECK(dev.size() == 2);
    CHECK(train.size() == 1);
}

TEST_CASE("make_dev_split guards degenerate inputs") {
    SyntheticSpec spec;
    spec.n = 1;
    spec.k = 1;
    const Corpus corpus = build_corpus(generate_synthetic(spec));
    CHECK_THROWS_AS(make_dev_split(corpus, 0.5, 0), DataError);
}

TEST_CASE("query and content views reference the corpus utterances") {
    SyntheticSpec spec;
    spec.n = 5;
    spec.k = 2;
    const Corpus corpus = build_corpus(generate_synthetic(spec));
    const std::vector<ViewRef> qs = query_views(corpus);
    const std::vector<ViewRef> cs = content_views(corpus);
    REQUIRE(qs.size() == 5);
    REQUIRE(cs.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(qs[i].size() == 1);
        CHECK(qs[i][0].tokens == corpus.instances[i].query.tokens);
        CHECK(cs[i].size() == corpus.instances[i].content.size());
    }
}
