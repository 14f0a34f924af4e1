#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "ragbench/vector_index.hpp"

using namespace ragbench;

namespace {

Chunk chunk(const std::string& id, std::size_t index) {
    Chunk c;
    c.doc_id = id;
    c.index = index;
    c.text = id + "#" + std::to_string(index);
    return c;
}

EmbeddingVector random_vector(std::mt19937& rng, std::size_t dim, bool unit = false) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    EmbeddingVector v;
    v.values.resize(dim);
    for (double& x : v.values) x = dist(rng);
    if (unit) {
        double n = v.norm();
        for (double& x : v.values) x /= n;
    }
    return v;
}

}  // namespace

TEST_CASE("build_index validates its inputs") {
    std::vector<Chunk> chunks{chunk("a", 0), chunk("a", 1), chunk("a", 2)};
    std::vector<EmbeddingVector> vectors{{{1, 0}}, {{0, 1}}, {{1, 1}}};
    CHECK(build_index(chunks, vectors, DistanceMetric::l2).size() == 3);

    std::vector<EmbeddingVector> short_vectors{{{1, 0}}, {{0, 1}}};
    CHECK_THROWS_AS(build_index(chunks, short_vectors, DistanceMetric::l2), IndexError);

    std::vector<EmbeddingVector> mixed{{{1, 0}}, {{0, 1}}, {{1, 1, 1}}};
    CHECK_THROWS_AS(build_index(chunks, mixed, DistanceMetric::l2), IndexError);

    CHECK_THROWS_AS(build_index({}, {}, DistanceMetric::l2), IndexError);
}

TEST_CASE("self-match ranks first with zero distance") {
    std::vector<Chunk> chunks{chunk("a", 0), chunk("a", 1)};
    std::vector<EmbeddingVector> vectors{{{1.0, 2.0}}, {{-3.0, 0.5}}};
    auto index = build_index(chunks, vectors, DistanceMetric::l2);
    auto res = index.search({{-3.0, 0.5}}, 1);
    REQUIRE(res.size() == 1);
    CHECK(res[0].chunk.index == 1);
    CHECK(res[0].distance == 0.0);
    CHECK(res[0].rank == 1);
}

TEST_CASE("k larger than the index returns everything") {
    std::vector<Chunk> chunks{chunk("a", 0), chunk("a", 1)};
    std::vector<EmbeddingVector> vectors{{{1.0, 0.0}}, {{0.0, 1.0}}};
    auto index = build_index(chunks, vectors, DistanceMetric::cosine);
    CHECK(index.search({{1.0, 1.0}}, 10).size() == 2);
}

TEST_CASE("dimension mismatch on search") {
    auto index = build_index({chunk("a", 0)}, {{{1.0, 0.0}}}, DistanceMetric::l2);
    CHECK_THROWS_AS(index.search({{1.0, 0.0, 0.0}}, 1), IndexError);
}

TEST_CASE("equidistant entries break ties by insertion order") {
    std::vector<Chunk> chunks{chunk("first", 0), chunk("second", 0)};
    std::vector<EmbeddingVector> vectors{{{1.0, 0.0}}, {{-1.0, 0.0}}};
    auto index = build_index(chunks, vectors, DistanceMetric::l2);
    auto res = index.search({{0.0, 0.0}}, 2);
    REQUIRE(res.size() == 2);
    CHECK(res[0].chunk.doc_id == "first");
    CHECK(res[1].chunk.doc_id == "second");

    auto oracle = brute_force_search(index.entries(), {{0.0, 0.0}}, 2, DistanceMetric::l2);
    CHECK(oracle[0].chunk.doc_id == "first");
}

TEST_CASE("search equals the brute-force oracle on random instances") {
    std::mt19937 rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng() % 200;
        std::size_t dim = 1 + rng() % 32;
        auto metric = (rng() % 2) ? DistanceMetric::l2 : DistanceMetric::cosine;

        std::vector<Chunk> chunks;
        std::vector<EmbeddingVector> vectors;
        for (std::size_t i = 0; i < n; ++i) {
            chunks.push_back(chunk("doc", i));
            vectors.push_back(random_vector(rng, dim));
        }
        auto index = build_index(chunks, vectors, metric);
        auto query = random_vector(rng, dim);
        std::size_t k = 1 + rng() % 8;

        auto got = index.search(query, k);
        auto expected = brute_force_search(index.entries(), query, k, metric);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].chunk.index == expected[i].chunk.index);
            CHECK(got[i].rank == expected[i].rank);
            CHECK(got[i].distance == expected[i].distance);
        }
    }
}

TEST_CASE("l2 and cosine rankings coincide on unit vectors") {
    std::mt19937 rng(202);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 2 + rng() % 100;
        std::size_t dim = 2 + rng() % 16;
        std::vector<Chunk> chunks;
        std::vector<EmbeddingVector> vectors;
        for (std::size_t i = 0; i < n; ++i) {
            chunks.push_back(chunk("doc", i));
            vectors.push_back(random_vector(rng, dim, /*unit=*/true));
        }
        auto l2_index = build_index(chunks, vectors, DistanceMetric::l2);
        auto cos_index = build_index(chunks, vectors, DistanceMetric::cosine);
        auto query = random_vector(rng, dim, /*unit=*/true);

        auto a = l2_index.search(query, n);
        auto b = cos_index.search(query, n);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].chunk.index == b[i].chunk.index);
            // l2^2 = 2 * cosine distance for unit vectors
            CHECK(a[i].distance * a[i].distance ==
                  Catch::Approx(2.0 * b[i].distance).margin(1e-9));
        }
    }
}

TEST_CASE("repeated searches return identical results") {
    std::mt19937 rng(303);
    std::vector<Chunk> chunks;
    std::vector<EmbeddingVector> vectors;
    for (std::size_t i = 0; i < 50; ++i) {
        chunks.push_back(chunk("doc", i));
        vectors.push_back(random_vector(rng, 8));
    }
    auto index = build_index(chunks, vectors, DistanceMetric::cosine);
    auto query = random_vector(rng, 8);
    auto a = index.search(query, 5);
    auto b = index.search(query, 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].chunk.index == b[i].chunk.index);
        CHECK(a[i].distance == b[i].distance);
    }
}

TEST_CASE("persistence round-trip reproduces identical search results") {
    namespace fs = std::filesystem;
    std::mt19937 rng(404);
    std::vector<Chunk> chunks;
    std::vector<EmbeddingVector> vectors;
    for (std::size_t i = 0; i < 40; ++i) {
        chunks.push_back(chunk("doc", i));
        vectors.push_back(random_vector(rng, 12));
    }
    auto index = build_index(chunks, vectors, DistanceMetric::l2);

    auto path = fs::temp_directory_path() / "ragbench-index-test.jsonl";
    save_index(index, path);
    auto reloaded = load_index(path);
    fs::remove(path);

    REQUIRE(reloaded.size() == index.size());
    CHECK(reloaded.metric() == index.metric());
    for (int trial = 0; trial < 10; ++trial) {
        auto query = random_vector(rng, 12);
        auto a = index.search(query, 4);
        auto b = reloaded.search(query, 4);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].chunk.index == b[i].chunk.index);
            CHECK(a[i].distance == b[i].distance);
        }
    }
}
