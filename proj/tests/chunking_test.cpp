#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "ragbench/chunking.hpp"

using namespace ragbench;

namespace {

Document make_doc(std::size_t tokens) {
    std::string text;
    for (std::size_t i = 0; i < tokens; ++i) {
        if (i) text.push_back(' ');
        text += "t" + std::to_string(i);
    }
    return {"doc", text, ""};
}

// Embedder whose vectors are chosen per sentence index so distance
// sequences can be scripted exactly.
class ScriptedEmbedder : public Embedder {
public:
    explicit ScriptedEmbedder(std::vector<EmbeddingVector> vectors)
        : vectors_(std::move(vectors)) {}
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
        std::vector<EmbeddingVector> out;
        for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(vectors_.at(i));
        return out;
    }
    std::string id() const override { return "scripted"; }

private:
    std::vector<EmbeddingVector> vectors_;
};

}  // namespace

TEST_CASE("tokenize emits whitespace tokens with exact offsets") {
    auto t = tokenize("a b  c");
    REQUIRE(t.size() == 3);
    CHECK(t.tokens[0].text == "a");
    CHECK(t.tokens[0].start == 0);
    CHECK(t.tokens[0].end == 1);
    CHECK(t.tokens[1].start == 2);
    CHECK(t.tokens[1].end == 3);
    CHECK(t.tokens[2].start == 5);
    CHECK(t.tokens[2].end == 6);

    CHECK(tokenize("").empty());
}

TEST_CASE("tokenize agrees with an independent word counter on a large fixture") {
    // oracle: count maximal non-space runs with a simple state machine
    std::mt19937 rng(11);
    std::string text;
    std::size_t expected = 0;
    for (int i = 0; i < 10000; ++i) {
        text += "word" + std::to_string(rng() % 100);
        ++expected;
        text += (rng() % 5 == 0) ? "\n" : " ";
        if (rng() % 7 == 0) text += "  ";
    }
    std::size_t oracle = 0;
    bool in_word = false;
    for (char c : text) {
        bool space = std::isspace(static_cast<unsigned char>(c));
        if (!space && !in_word) ++oracle;
        in_word = !space;
    }
    REQUIRE(oracle == expected);
    CHECK(tokenize(text).size() == oracle);
}

TEST_CASE("naive_chunk hand-derived case: 10 tokens, size 4, overlap 1") {
    auto chunks = naive_chunk(make_doc(10), 4, 1);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].token_start == 0);
    CHECK(chunks[0].token_end == 4);
    CHECK(chunks[1].token_start == 3);
    CHECK(chunks[1].token_end == 7);
    CHECK(chunks[2].token_start == 6);
    CHECK(chunks[2].token_end == 10);
}

TEST_CASE("naive_chunk degenerate windows") {
    CHECK(naive_chunk(make_doc(3), 1024, 128).size() == 1);
    CHECK(naive_chunk(make_doc(1024), 1024, 128).size() == 1);
    CHECK_THROWS_AS(naive_chunk(make_doc(5), 4, 4), std::invalid_argument);
    CHECK_THROWS_AS(naive_chunk(make_doc(5), 0, 0), std::invalid_argument);
}

TEST_CASE("naive_chunk coverage, overlap and monotonicity properties") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + rng() % 300;
        std::size_t size = 2 + rng() % 64;
        std::size_t overlap = rng() % size;
        auto doc = make_doc(n);
        auto chunks = naive_chunk(doc, size, overlap);
        REQUIRE(!chunks.empty());

        // coverage: every token in at least one chunk
        std::vector<int> covered(n, 0);
        for (const auto& c : chunks) {
            REQUIRE(c.token_start < c.token_end);
            for (std::size_t t = c.token_start; t < c.token_end; ++t) covered[t] = 1;
            // chunk text equals the source substring
            CHECK(c.text == doc.text.substr(c.char_start, c.char_end - c.char_start));
        }
        for (std::size_t t = 0; t < n; ++t) REQUIRE(covered[t] == 1);

        // stride: consecutive starts differ by size - overlap
        for (std::size_t i = 0; i + 1 < chunks.size(); ++i)
            REQUIRE(chunks[i + 1].token_start - chunks[i].token_start == size - overlap);

        // exact overlap except possibly the last pair
        for (std::size_t i = 0; i + 2 < chunks.size(); ++i)
            REQUIRE(chunks[i].token_end - chunks[i + 1].token_start == overlap);

        // monotone chunk count in size for fixed overlap
        if (size + 8 > overlap + 1) {
            auto bigger = naive_chunk(doc, size + 8, overlap);
            REQUIRE(bigger.size() <= chunks.size());
        }
    }
}

TEST_CASE("sentence_split basics") {
    CHECK(sentence_split("A. B! C?").size() == 3);
    CHECK(sentence_split("no terminator").size() == 1);
    CHECK(sentence_split("").empty());
}

TEST_CASE("sentence_split golden output for a paragraph with abbreviations") {
    // behavior frozen after inspecting the splitter once: "e.g." ends with a
    // period followed by whitespace, so it terminates a sentence
    std::string text = "Chunking splits text, e.g. into windows. It keeps offsets! Does it work?";
    auto spans = sentence_split(text);
    std::vector<std::string> expected{"Chunking splits text, e.g.", "into windows.",
                                      "It keeps offsets!", "Does it work?"};
    REQUIRE(spans.size() == expected.size());
    for (std::size_t i = 0; i < spans.size(); ++i) CHECK(spans[i].text == expected[i]);
}

TEST_CASE("semantic_distances against direct cosine recomputation") {
    auto unit = [](std::vector<double> v) {
        EmbeddingVector e{std::move(v)};
        double n = e.norm();
        for (double& x : e.values) x /= n;
        return e;
    };

    SECTION("identical sentences give zero distance") {
        ScriptedEmbedder emb({unit({1, 0}), unit({1, 0})});
        auto d = semantic_distances({"same.", "same."}, emb);
        REQUIRE(d.size() == 1);
        CHECK(d[0] == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("orthogonal embeddings give distance 1") {
        ScriptedEmbedder emb({unit({1, 0}), unit({0, 1})});
        auto d = semantic_distances({"a.", "b."}, emb);
        REQUIRE(d.size() == 1);
        CHECK(d[0] == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("random five-sentence fixture matches dot-product recomputation") {
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<EmbeddingVector> vs;
        for (int i = 0; i < 5; ++i) vs.push_back({{dist(rng), dist(rng), dist(rng)}});
        ScriptedEmbedder emb(vs);
        auto d = semantic_distances({"s1.", "s2.", "s3.", "s4.", "s5."}, emb);
        REQUIRE(d.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            double dot = 0, na = 0, nb = 0;
            for (int k = 0; k < 3; ++k) {
                dot += vs[i].values[k] * vs[i + 1].values[k];
                na += vs[i].values[k] * vs[i].values[k];
                nb += vs[i + 1].values[k] * vs[i + 1].values[k];
            }
            double expected = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
            CHECK(d[i] == Catch::Approx(expected).margin(1e-12));
        }
    }
    SECTION("fewer than two sentences gives an empty list") {
        ScriptedEmbedder emb({});
        CHECK(semantic_distances({"only one."}, emb).empty());
    }
}

TEST_CASE("breakpoint_threshold hand-derived values") {
    std::vector<double> d{1, 2, 3, 4};
    CHECK(breakpoint_threshold(d, {BreakpointMethod::percentile, 50.0}) ==
          Catch::Approx(2.5).margin(1e-12));

    // zero variance: stddev fence collapses onto the mean
    std::vector<double> flat{0.3, 0.3, 0.3};
    CHECK(breakpoint_threshold(flat, {BreakpointMethod::stddev, 3.0}) ==
          Catch::Approx(0.3).margin(1e-12));

    // IQR oracle: brute-force quartiles with the same interpolation rule
    auto quantile = [](std::vector<double> xs, double q) {
        std::sort(xs.begin(), xs.end());
        double pos = q * static_cast<double>(xs.size() - 1);
        auto lo = static_cast<std::size_t>(std::floor(pos));
        auto hi = static_cast<std::size_t>(std::ceil(pos));
        return xs[lo] + (pos - std::floor(pos)) * (xs[hi] - xs[lo]);
    };
    double q1 = quantile(d, 0.25), q3 = quantile(d, 0.75);
    CHECK(breakpoint_threshold(d, {BreakpointMethod::interquartile, 1.5}) ==
          Catch::Approx(q3 + 1.5 * (q3 - q1)).margin(1e-12));

    CHECK_THROWS_AS(breakpoint_threshold({}, {BreakpointMethod::percentile, 50.0}),
                    std::invalid_argument);
}

TEST_CASE("semantic_chunk splits where the exceedance rule fires") {
    SECTION("one-sentence document is one chunk") {
        Document doc{"d", "Only one sentence here.", ""};
        HashingEmbedder emb(64);
        auto chunks = semantic_chunk(doc, emb, {BreakpointMethod::percentile, 95.0});
        REQUIRE(chunks.size() == 1);
        CHECK(chunks[0].text == "Only one sentence here.");
    }
    SECTION("distances [0.1, 0.9, 0.1] with a 0.5 threshold give 2 chunks") {
        // scripted vectors: s1~s2 close, s2-s3 far, s3~s4 close
        std::vector<double> distances{0.1, 0.9, 0.1};
        BreakpointRule rule{BreakpointMethod::percentile, 50.0};
        // force threshold 0.5 by checking the breakpoint selection directly
        auto breaks = semantic_breakpoints(distances, rule);
        double threshold = breakpoint_threshold(distances, rule);
        std::vector<std::size_t> expected;
        for (std::size_t i = 0; i < distances.size(); ++i)
            if (distances[i] > threshold) expected.push_back(i);
        CHECK(breaks == expected);
        REQUIRE(breaks.size() == 1);
        CHECK(breaks[0] == 1);  // split after the second sentence
    }
    SECTION("all-identical sentences stay one chunk under every rule") {
        Document doc{"d", "Same thing. Same thing. Same thing. Same thing.", ""};
        HashingEmbedder emb(64);
        for (auto m : {BreakpointMethod::percentile, BreakpointMethod::interquartile,
                       BreakpointMethod::gradient, BreakpointMethod::stddev}) {
            auto chunks = semantic_chunk(doc, emb, {m, 0.0});
            INFO("method " << to_string(m));
            CHECK(chunks.size() == 1);
        }
    }
}

TEST_CASE("semantic chunks partition the sentence sequence") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::ostringstream text;
        int sentences = 1 + static_cast<int>(rng() % 12);
        for (int s = 0; s < sentences; ++s) {
            text << "word" << rng() % 50 << " word" << rng() % 50 << " word" << rng() % 50
                 << ". ";
        }
        Document doc{"d", text.str(), ""};
        HashingEmbedder emb(64);
        auto rule = BreakpointRule{BreakpointMethod::percentile, 50.0};
        auto chunks = semantic_chunk(doc, emb, rule);
        auto spans = sentence_split(doc.text);

        // no gaps, no overlaps: chunks cover the sentences in order
        std::size_t sentence_idx = 0;
        for (const auto& c : chunks) {
            REQUIRE(sentence_idx < spans.size());
            CHECK(c.char_start == spans[sentence_idx].start);
            while (sentence_idx < spans.size() && spans[sentence_idx].end <= c.char_end)
                ++sentence_idx;
        }
        CHECK(sentence_idx == spans.size());
    }
}

TEST_CASE("raising the percentile never adds breakpoints") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> dist(0.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> d(2 + rng() % 40);
        for (double& x : d) x = dist(rng);
        std::size_t prev = SIZE_MAX;
        for (double p : {10.0, 30.0, 50.0, 70.0, 90.0, 99.0}) {
            auto n = semantic_breakpoints(d, {BreakpointMethod::percentile, p}).size();
            REQUIRE(n <= prev);
            prev = n;
        }
    }
}

TEST_CASE("chunking is deterministic") {
    Document doc{"d",
                 "First sentence about stars. Second sentence about fish! Third about rocks? "
                 "Fourth sentence closes it.",
                 ""};
    HashingEmbedder emb(64);
    for (auto kind : {ChunkingPolicy::Kind::naive, ChunkingPolicy::Kind::semantic}) {
        ChunkingPolicy p;
        p.kind = kind;
        p.size = 8;
        p.overlap = 2;
        auto a = chunk_document(doc, p, emb);
        auto b = chunk_document(doc, p, emb);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].text == b[i].text);
            CHECK(a[i].token_start == b[i].token_start);
            CHECK(a[i].token_end == b[i].token_end);
        }
    }
}
