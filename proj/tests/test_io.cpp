#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <limits>

#include "hepm/io.hpp"
#include "support.hpp"

using namespace hepm;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("hepm_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return path / name;
    }
};

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

void expect_same_bits(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    ASSERT_EQ(a.rows(), b.rows());
    ASSERT_EQ(a.cols(), b.cols());
    for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_TRUE(same_bits(a.data()[i], b.data()[i]));
}

}  // namespace

TEST(LoadEvents, HeaderOnlyFileIsEmpty) {
    TempDir d;
    auto e = load_events(d.write("e.csv", "t,src,dst\n"));
    EXPECT_EQ(e.events.size(), 0u);
    EXPECT_EQ(e.vocab.size(), 0);
    EXPECT_EQ(e.events.node_count(), 0);
}

TEST(LoadEvents, SortsAndInternsInOrderOfAppearance) {
    TempDir d;
    auto e = load_events(d.write("e.csv", "t,src,dst\n3.0,b,a\n1.0,a,c\n2.0,c,b\n"));
    EXPECT_EQ(e.self_edges, 0u);
    ASSERT_EQ(e.events.size(), 3u);
    EXPECT_DOUBLE_EQ(e.events[0].t, 1.0);
    EXPECT_EQ(e.vocab.name(0), "b");
    EXPECT_EQ(e.vocab.name(1), "a");
    EXPECT_EQ(e.vocab.name(2), "c");
    EXPECT_EQ(e.events[0].src, 1);
    EXPECT_EQ(e.events[0].dst, 2);
    EXPECT_DOUBLE_EQ(e.events.horizon(), 3.0);
}

TEST(LoadEvents, SelfEdgesAreSkippedAndCounted) {
    TempDir d;
    auto e = load_events(d.write("e.csv", "t,src,dst\n1.5,a,a\n2.0,a,b\n"));
    EXPECT_EQ(e.self_edges, 1u);
    EXPECT_EQ(e.events.size(), 1u);
}

TEST(LoadEvents, MalformedRowsNameTheLine) {
    TempDir d;
    try {
        load_events(d.write("e.csv", "t,src,dst\n1.0,a,b\nfoo,a,b\n"));
        FAIL() << "no error";
    } catch (const DataError& err) {
        EXPECT_NE(std::string(err.what()).find(":3:"), std::string::npos) << err.what();
    }
    EXPECT_THROW(load_events(d.write("f.csv", "t,src,dst\n1.0,a\n")), DataError);
    EXPECT_THROW(load_events(d.write("g.csv", "time,from,to\n")), DataError);
    EXPECT_THROW(load_events(d.write("h.csv", "t,src,dst\n-1,a,b\n")), DataError);
    EXPECT_THROW(load_events(d.path / "missing.csv"), DataError);
}

TEST(LoadEvents, ExtendsAGivenVocabulary) {
    TempDir d;
    Vocabulary v;
    v.intern("z");
    auto e = load_events(d.write("e.csv", "t,src,dst\n1.0,a,z\n"), 5.0, v);
    EXPECT_EQ(e.vocab.size(), 2);
    EXPECT_EQ(e.events[0].dst, 0);
    EXPECT_DOUBLE_EQ(e.events.horizon(), 5.0);
}

TEST(Covariates, SparseRowsAndErrors) {
    TempDir d;
    Vocabulary v;
    v.intern("a");
    v.intern("b");
    v.intern("c");
    auto covs = load_covariates(d.write("x.csv", "src,dst,x1,x2\na,b,0.5,-1\n"), v, 2);
    ASSERT_EQ(covs.get({0, 1}).size(), 2u);
    EXPECT_DOUBLE_EQ(covs.get({0, 1})[1], -1.0);
    EXPECT_TRUE(covs.get({1, 0}).empty());
    EXPECT_THROW(load_covariates(d.write("y.csv", "src,dst,x1\na,b,1\n"), v, 2), DataError);
    try {
        load_covariates(d.write("z.csv", "src,dst,x1\na,b,1\na,b,2\n"), v, 1);
        FAIL() << "no error";
    } catch (const DataError& err) {
        EXPECT_NE(std::string(err.what()).find("(a,b)"), std::string::npos) << err.what();
    }
    EXPECT_THROW(load_covariates(d.write("w.csv", "src,dst,x1\na,q,1\n"), v, 1), DataError);
}

TEST(Checkpoint, CommunityRoundTripIsBitExact) {
    TempDir d;
    Rng rng(1);
    for (int rep = 0; rep < 5; ++rep) {
        auto p = initial_community_state(7, 3, rep);
        for (Eigen::Index i = 0; i < p.phi.size(); ++i) p.phi.data()[i] = sample_gamma(0.3, 2.0, rng);
        p.hyper.xi = uniform01(rng);
        save_checkpoint(d.path / "xi.json", p);
        auto q = load_community_checkpoint(d.path / "xi.json");
        expect_same_bits(p.phi, q.phi);
        expect_same_bits(p.omega, q.omega);
        expect_same_bits(p.r, q.r);
        expect_same_bits(p.a, q.a);
        expect_same_bits(p.c, q.c);
        EXPECT_TRUE(same_bits(p.hyper.xi, q.hyper.xi));
    }
}

TEST(Checkpoint, HawkesRoundTripKeepsSparsity) {
    TempDir d;
    Rng rng(2);
    for (int rep = 0; rep < 5; ++rep) {
        auto p = gen::random_params(rng, 6, 2, 3);
        p.nu << 1.0, 0.1 / 3.0, 7.0;
        save_checkpoint(d.path / "theta.json", p);
        auto q = load_hawkes_checkpoint(d.path / "theta.json");
        expect_same_bits(p.alpha, q.alpha);
        expect_same_bits(p.beta, q.beta);
        expect_same_bits(p.phi, q.phi);
        EXPECT_EQ(p.mu, q.mu);
        EXPECT_EQ(p.mu.pairs(), q.mu.pairs());
        EXPECT_TRUE(same_bits(p.delta, q.delta));
        EXPECT_TRUE(same_bits(p.exposure, q.exposure));
        EXPECT_EQ(p.num_nodes, q.num_nodes);
    }
}

TEST(Checkpoint, VersionAndCorruption) {
    TempDir d;
    auto p = initial_community_state(3, 2, 0);
    save_checkpoint(d.path / "xi.json", p);
    std::ifstream in(d.path / "xi.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto pos = text.find("\"format_version\": 1");
    ASSERT_NE(pos, std::string::npos);
    auto bumped = text;
    bumped.replace(pos, 19, "\"format_version\": 9");
    try {
        load_community_checkpoint(d.write("v.json", bumped));
        FAIL() << "no error";
    } catch (const DataError& err) {
        const std::string msg = err.what();
        EXPECT_NE(msg.find('9'), std::string::npos);
        EXPECT_NE(msg.find('1'), std::string::npos);
    }
    EXPECT_THROW(load_community_checkpoint(d.write("c.json", text.substr(0, text.size() / 2))), DataError);
    EXPECT_THROW(load_hawkes_checkpoint(d.path / "xi.json"), DataError);
}

TEST(Vocabulary, RoundTripAndBijection) {
    TempDir d;
    Vocabulary v;
    for (const char* s : {"x", "y", "x", "node 3", "y"}) v.intern(s);
    EXPECT_EQ(v.size(), 3);
    save_vocabulary(d.path / "vocab.json", v);
    auto w = load_vocabulary(d.path / "vocab.json");
    EXPECT_EQ(w.names(), v.names());
    for (int i = 0; i < w.size(); ++i) EXPECT_EQ(*w.find(w.name(i)), i);
}

TEST(Scenario, ParsesListAndMatrixAlpha) {
    auto a = parse_scenario(R"({"V": 50, "alpha": [0.5, 1.0, 1.5], "delta": 0.2, "T": 100, "max_events": 5000})");
    EXPECT_EQ(a.blocks.num_nodes, 50);
    EXPECT_EQ(a.blocks.alpha.size(), 3u);
    EXPECT_DOUBLE_EQ(a.sim.horizon, 100.0);
    EXPECT_EQ(a.sim.max_events, 5000u);
    EXPECT_FALSE(a.alpha_matrix);
    auto b = parse_scenario(R"({"alpha": [[1, 0.5], [0.2, 2]]})");
    ASSERT_TRUE(b.alpha_matrix);
    EXPECT_DOUBLE_EQ((*b.alpha_matrix)(0, 1), 0.5);
    EXPECT_EQ(b.blocks.alpha, (std::vector<double>{1.0, 2.0}));
    EXPECT_THROW(parse_scenario("{"), DataError);
    EXPECT_THROW(parse_scenario(R"({"K": 2, "alpha": [1]})"), DataError);
}

TEST(Manifest, LineFormat) {
    TempDir d;
    append_manifest(d.path, "metrics.csv", 0xabcULL, 42);
    std::ifstream in(d.path / "manifest.txt");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "metrics.csv config_hash=0000000000000abc seed=42");
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(FormatDouble, ShortestRoundTrip) {
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
        std::uint64_t bits = rng();
        double x;
        std::memcpy(&x, &bits, sizeof x);
        if (!std::isfinite(x)) continue;
        EXPECT_TRUE(same_bits(std::strtod(format_double(x).c_str(), nullptr), x)) << format_double(x);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
}
