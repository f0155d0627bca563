#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "wdkg/errors.hpp"
#include "wdkg/graph.hpp"
#include "wdkg/io.hpp"
#include "wdkg/rng.hpp"
#include "wdkg/synth.hpp"

using namespace wdkg;
namespace fs = std::filesystem;

namespace {

synth::SynthConfig small_config(std::uint64_t seed = 7) {
    synth::SynthConfig cfg;
    cfg.n_nodes = 20;
    cfg.n_edges = 30;
    cfg.n_slices = 5;
    cfg.tc_samples = 60;
    cfg.kpi_parents = {1, 2, 3};
    cfg.seed = seed;
    return cfg;
}

double correlation(const Matrix& data, int a, int b) {
    const std::size_t t_len = data.cols;
    double ma = 0.0, mb = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        ma += data(static_cast<std::size_t>(a), t);
        mb += data(static_cast<std::size_t>(b), t);
    }
    ma /= static_cast<double>(t_len);
    mb /= static_cast<double>(t_len);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        const double xa = data(static_cast<std::size_t>(a), t) - ma;
        const double xb = data(static_cast<std::size_t>(b), t) - mb;
        sab += xa * xb;
        saa += xa * xa;
        sbb += xb * xb;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace

TEST_CASE("default benchmark matches the published scale") {
    synth::SynthConfig cfg; // defaults
    const auto result = synth::generate(cfg);
    CHECK(result.kg.nodes.size() == 82);
    CHECK(result.kg.slices.size() == 30);
    CHECK(result.kg.tc_samples == 100);
    CHECK(result.truth.base_edges.size() == 133);
    CHECK(result.truth.kpi_parents.size() == 4);

    // Sparse topology: symmetric nonzero entries stay near 3-4% of N^2, and
    // the per-slice count respects the loose dropout bound.
    for (const auto& s : result.kg.slices) {
        const auto count = static_cast<double>(s.edges.size());
        CHECK(count >= 133.0 * (1.0 - cfg.edge_flip_prob) * 0.5);
        CHECK(count <= 133.0 * 1.5);
        const double density = 2.0 * count / (82.0 * 82.0);
        CHECK(density > 0.025);
        CHECK(density < 0.045);
    }
}

TEST_CASE("n_edges = 0 gives independent AR series") {
    auto cfg = small_config();
    cfg.n_edges = 0;
    const auto result = synth::generate(cfg);
    CHECK(result.truth.base_edges.empty());
    CHECK(result.truth.kpi_parents.empty());
    for (const auto& s : result.kg.slices) CHECK(s.edges.empty());
    // AR(1) series are smooth: successive-sample correlation is strong.
    const auto& d = result.kg.slices[0].data;
    double lag = 0.0, var = 0.0;
    for (std::size_t t = 1; t < d.cols; ++t) {
        lag += d(0, t) * d(0, t - 1);
        var += d(0, t) * d(0, t);
    }
    CHECK(lag / var > 0.6);
}

TEST_CASE("generation is deterministic per seed") {
    const auto cfg = small_config(123);
    const auto a = synth::generate(cfg);
    const auto b = synth::generate(cfg);
    CHECK(a.kg == b.kg);

    const fs::path da = fs::temp_directory_path() / "wdkg_synth_a";
    const fs::path db = fs::temp_directory_path() / "wdkg_synth_b";
    fs::remove_all(da);
    fs::remove_all(db);
    save_kg(a.kg, da);
    save_kg(b.kg, db);
    CHECK(io::read_file(da / "kg.json") == io::read_file(db / "kg.json"));
    CHECK(io::read_file(da / "telemetry.csv") == io::read_file(db / "telemetry.csv"));

    const auto c = synth::generate(small_config(124));
    CHECK(c.kg.slices[0].data.v != a.kg.slices[0].data.v);
}

TEST_CASE("ground truth covers every slice edge") {
    const auto result = synth::generate(small_config(11));
    const std::set<Edge> base(result.truth.base_edges.begin(), result.truth.base_edges.end());
    for (const auto& s : result.kg.slices)
        for (const auto& e : s.edges) CHECK(base.count(e) == 1);

    // KPI-incident edges never flip
    for (const auto& s : result.kg.slices)
        for (int p : result.truth.kpi_parents)
            CHECK(s.has_edge(result.truth.kpi_node, p));
}

TEST_CASE("zero flip probability keeps the base topology in every slice") {
    auto cfg = small_config(5);
    cfg.edge_flip_prob = 0.0;
    const auto result = synth::generate(cfg);
    for (const auto& s : result.kg.slices) CHECK(s.edges == result.truth.base_edges);
}

TEST_CASE("connected pairs correlate more strongly than random non-edges") {
    int wins = 0;
    const int n_seeds = 30;
    for (int seed = 0; seed < n_seeds; ++seed) {
        auto cfg = small_config(static_cast<std::uint64_t>(1000 + seed));
        const auto result = synth::generate(cfg);
        const auto& slice = result.kg.slices[0];
        std::set<std::pair<int, int>> edge_set;
        for (const auto& e : slice.edges) edge_set.insert({e.src, e.dst});

        double edge_corr = 0.0;
        int edge_n = 0;
        for (const auto& e : slice.edges) {
            edge_corr += std::abs(correlation(slice.data, e.src, e.dst));
            ++edge_n;
        }
        double non_corr = 0.0;
        int non_n = 0;
        for (int i = 0; i < cfg.n_nodes && non_n < edge_n; ++i)
            for (int j = i + 1; j < cfg.n_nodes && non_n < edge_n; ++j)
                if (!edge_set.count({i, j})) {
                    non_corr += std::abs(correlation(slice.data, i, j));
                    ++non_n;
                }
        if (edge_corr / edge_n > non_corr / non_n) ++wins;
    }
    // One-sided sign test at n=30: 20 wins is already significant; the
    // generator should clear it with a wide margin.
    CHECK(wins >= 25);
}

TEST_CASE("noise-free KPI is an exact linear map of its parents") {
    auto cfg = small_config(21);
    cfg.noise_sigma = 0.0;
    const auto result = synth::generate(cfg);
    const auto& d = result.kg.slices[0].data;
    const auto& parents = result.truth.kpi_parents;
    REQUIRE(parents.size() == 3);

    // Solve the 3x3 normal equations for kpi ~ parents and check residual.
    const int k = static_cast<int>(parents.size());
    std::vector<std::vector<double>> ata(k, std::vector<double>(k, 0.0));
    std::vector<double> aty(k, 0.0);
    for (std::size_t t = 0; t < d.cols; ++t) {
        for (int i = 0; i < k; ++i) {
            const double xi = d(static_cast<std::size_t>(parents[static_cast<std::size_t>(i)]), t);
            aty[static_cast<std::size_t>(i)] += xi * d(static_cast<std::size_t>(result.truth.kpi_node), t);
            for (int j = 0; j < k; ++j)
                ata[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +=
                    xi * d(static_cast<std::size_t>(parents[static_cast<std::size_t>(j)]), t);
        }
    }
    // Gaussian elimination
    std::vector<double> beta = aty;
    for (int col = 0; col < k; ++col) {
        int pivot = col;
        for (int row = col + 1; row < k; ++row)
            if (std::abs(ata[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)]) >
                std::abs(ata[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]))
                pivot = row;
        std::swap(ata[static_cast<std::size_t>(col)], ata[static_cast<std::size_t>(pivot)]);
        std::swap(beta[static_cast<std::size_t>(col)], beta[static_cast<std::size_t>(pivot)]);
        for (int row = col + 1; row < k; ++row) {
            const double f = ata[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] /
                             ata[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
            for (int c2 = col; c2 < k; ++c2)
                ata[static_cast<std::size_t>(row)][static_cast<std::size_t>(c2)] -=
                    f * ata[static_cast<std::size_t>(col)][static_cast<std::size_t>(c2)];
            beta[static_cast<std::size_t>(row)] -= f * beta[static_cast<std::size_t>(col)];
        }
    }
    for (int row = k - 1; row >= 0; --row) {
        for (int c2 = row + 1; c2 < k; ++c2)
            beta[static_cast<std::size_t>(row)] -=
                ata[static_cast<std::size_t>(row)][static_cast<std::size_t>(c2)] *
                beta[static_cast<std::size_t>(c2)];
        beta[static_cast<std::size_t>(row)] /= ata[static_cast<std::size_t>(row)][static_cast<std::size_t>(row)];
    }
    double ss_res = 0.0, ss_tot = 0.0, mean = 0.0;
    for (std::size_t t = 0; t < d.cols; ++t) mean += d(static_cast<std::size_t>(result.truth.kpi_node), t);
    mean /= static_cast<double>(d.cols);
    for (std::size_t t = 0; t < d.cols; ++t) {
        double pred = 0.0;
        for (int i = 0; i < k; ++i)
            pred += beta[static_cast<std::size_t>(i)] *
                    d(static_cast<std::size_t>(parents[static_cast<std::size_t>(i)]), t);
        const double y = d(static_cast<std::size_t>(result.truth.kpi_node), t);
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean) * (y - mean);
    }
    CHECK(1.0 - ss_res / ss_tot > 0.999999);
}

TEST_CASE("config invariants are enforced") {
    auto cfg = small_config();
    cfg.kpi_parents = {1, 1};
    CHECK_THROWS_AS(synth::generate(cfg), ConfigInvalid);
    cfg = small_config();
    cfg.kpi_parents = {cfg.kpi_node};
    CHECK_THROWS_AS(synth::generate(cfg), ConfigInvalid);
    cfg = small_config();
    cfg.n_edges = cfg.n_nodes * (cfg.n_nodes - 1) / 2 + 1;
    CHECK_THROWS_AS(synth::generate(cfg), ConfigInvalid);
    cfg = small_config();
    cfg.edge_flip_prob = 1.0;
    CHECK_THROWS_AS(synth::generate(cfg), ConfigInvalid);
}
