// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Geometry>

#include "cfgtok/cfgtok.hpp"

namespace {

namespace fs = std::filesystem;
using namespace cfgtok;
using Clock = std::chrono::steady_clock;

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<double> gaussian(std::mt19937& rng, std::size_t n) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

double uniform(std::mt19937& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * b[n];
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + CFGTOK_CLI_PATH + "\" " + args + " >\"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

void geometry_round_trip() {
  std::mt19937 rng(1);
  const auto t0 = Clock::now();
  double worst_px = 0, worst_depth = 0;
  for (int n = 0; n < 10000; ++n) {
    const CameraIntrinsics k(uniform(rng, 50, 1500), uniform(rng, 50, 1500), uniform(rng, 0, 1280),
                             uniform(rng, 0, 960));
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    const auto q4 = gaussian(rng, 4);
    m.topLeftCorner<3, 3>() = Eigen::Quaterniond(q4[0], q4[1], q4[2], q4[3]).normalized().toRotationMatrix();
    for (int r = 0; r < 3; ++r) m(r, 3) = uniform(rng, -10, 10);
    const CameraPose t(m);
    const PixelCoord q{uniform(rng, 0, 1280), uniform(rng, 0, 960)};
    const double depth = uniform(rng, 0.05, 50.0);
    const auto pr = project_point(back_project_pixel(q, depth, k, t), k, t);
    worst_px = std::max({worst_px, std::abs(pr.pixel.u - q.u), std::abs(pr.pixel.v - q.v)});
    worst_depth = std::max(worst_depth, std::abs(pr.depth - depth) / depth);
  }
  const double secs = seconds_since(t0);
  report("geometry-round-trip", worst_px <= 1e-6 && worst_depth <= 1e-9 && secs < 5.0,
         fmt("max pixel err %.2e, max rel depth err %.2e", worst_px, worst_depth) + fmt(", %.3f s", secs));
}

void voxel_pooling_oracle() {
  std::mt19937 rng(2);
  double worst = 0;
  bool counts_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t points = std::uniform_int_distribution<std::size_t>(1, 10000)(rng);
    const std::size_t dim = 2 * std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const double vs = uniform(rng, 0.05, 0.5);
    PointFeatureCloud cloud(dim);
    for (std::size_t n = 0; n < points; ++n) {
      cloud.push_back({uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -1, 2)}, gaussian(rng, dim), "f");
    }
    VoxelGridConfig cfg;
    cfg.voxel_size = vs;
    const auto grid = voxelize(cloud, cfg);
    const Eigen::Vector3d o = grid.origin();
    std::map<std::tuple<long, long, long>, std::pair<std::vector<long double>, long>> groups;
    for (std::size_t n = 0; n < cloud.size(); ++n) {
      const auto& p = cloud.points[n];
      auto& g = groups[{long(std::floor((p.x() - o.x()) / vs)), long(std::floor((p.y() - o.y()) / vs)),
                        long(std::floor((p.z() - o.z()) / vs))}];
      g.first.resize(dim, 0.0L);
      for (std::size_t c = 0; c < dim; ++c) g.first[c] += cloud.feature(n)[c];
      ++g.second;
    }
    if (groups.size() != grid.size()) counts_ok = false;
    for (const auto& [key, g] : groups) {
      const auto it = grid.cells().find({std::get<0>(key), std::get<1>(key), std::get<2>(key)});
      if (it == grid.cells().end() || it->second.count != static_cast<std::size_t>(g.second)) {
        counts_ok = false;
        continue;
      }
      for (std::size_t c = 0; c < dim; ++c) {
        const double mean = static_cast<double>(g.first[c] / g.second);
        worst = std::max(worst, std::abs(it->second.feature[c] - mean) / std::max(std::abs(mean), 1e-12));
      }
    }
  }
  report("voxel-pooling-oracle", counts_ok && worst <= 1e-6, fmt("max rel err %.2e over 100 clouds", worst));
}

void rope_suite() {
  std::mt19937 rng(3);
  double norm_err = 0, comp_err = 0, rel_err = 0;
  for (int n = 0; n < 100; ++n) {
    const std::size_t d = 2 * std::uniform_int_distribution<std::size_t>(1, 64)(rng);
    const RoPEConfig cfg(d, uniform(rng, 100, 20000));
    const auto x = gaussian(rng, d), y = gaussian(rng, d);
    const double p1 = uniform(rng, -100, 100), p2 = uniform(rng, -100, 100);
    const auto rx = rope_rotate(x, p1, cfg);
    const double nx = std::sqrt(dot(x, x)), ny = std::sqrt(dot(y, y));
    norm_err = std::max(norm_err, std::abs(std::sqrt(dot(rx, rx)) - nx) / nx);
    const auto two = rope_rotate(rope_rotate(x, p1, cfg), p2, cfg), one = rope_rotate(x, p1 + p2, cfg);
    for (std::size_t c = 0; c < d; ++c) comp_err = std::max(comp_err, std::abs(two[c] - one[c]));
    const double lhs = dot(rx, rope_rotate(y, p2, cfg));
    const double rhs = dot(x, rope_rotate(y, p2 - p1, cfg));
    rel_err = std::max(rel_err, std::abs(lhs - rhs) / (nx * ny));
  }
  report("rope-suite", norm_err <= 1e-6 && comp_err <= 1e-6 && rel_err <= 1e-6,
         fmt("norm %.2e, composition %.2e", norm_err, comp_err) + fmt(", relative %.2e (scaled)", rel_err));
}

void fourier_embedding() {
  std::mt19937 rng(4);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 * std::uniform_int_distribution<std::size_t>(1, 64)(rng);
    const std::size_t in = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    const auto cfg = FourierConfig::seeded(in, d, static_cast<std::uint64_t>(trial));
    const auto x = gaussian(rng, d);
    std::vector<double> p(in);
    for (double& v : p) v = uniform(rng, -10, 10);
    // Scalar re-implementation.
    const auto w = cfg.projection();
    const Mlp& mlp = cfg.mlp();
    std::vector<double> f(d), h(mlp.hidden_dim), expect(x);
    for (std::size_t r = 0; r < d / 2; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < in; ++c) s += w[r * in + c] * p[c];
      f[r] = std::cos(2 * std::numbers::pi * s) / std::sqrt(double(d));
      f[r + d / 2] = std::sin(2 * std::numbers::pi * s) / std::sqrt(double(d));
    }
    for (std::size_t r = 0; r < mlp.hidden_dim; ++r) {
      double s = mlp.b1[r];
      for (std::size_t c = 0; c < d; ++c) s += mlp.w1[r * d + c] * f[c];
      h[r] = 0.5 * s * std::erfc(-s / std::numbers::sqrt2);
    }
    for (std::size_t r = 0; r < d; ++r) {
      double s = mlp.b2[r];
      for (std::size_t c = 0; c < mlp.hidden_dim; ++c) s += mlp.w2[r * mlp.hidden_dim + c] * h[c];
      expect[r] += s;
    }
    const auto got = fourier_embed(x, p, cfg);
    for (std::size_t c = 0; c < d; ++c) worst = std::max(worst, std::abs(got[c] - expect[c]));
  }
  bool identity = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 16;
    const FourierConfig cfg(2, d, gaussian(rng, d), Mlp::zero_output(d));
    const auto x = gaussian(rng, d);
    identity = identity && fourier_embed(x, gaussian(rng, 2), cfg) == x;
  }
  report("fourier-embedding", worst <= 1e-6 && identity,
         fmt("max err vs scalar oracle %.2e", worst) + "; zero-MLP exact identity: " + (identity ? "yes" : "no"));
}

void cfg_structure(const fs::path& work) {
  bool columns_ok = true, compression_ok = true;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SynthOptions opt;
    opt.seed = seed;
    opt.frames = 20;
    opt.feature_size = 32;
    opt.dim = 16;
    const auto dir = work / ("cfg_" + std::to_string(seed));
    const auto truth = write_synth_scene(dir, opt);
    const auto result = tokenize_manifest(load_manifest(dir / "manifest.json"), TokenizeOptions{});
    std::set<std::pair<std::int64_t, std::int64_t>> columns;
    for (const auto& [idx, cell] : result.grid.cells()) columns.insert({idx.i, idx.j});
    columns_ok = columns_ok && result.pre_budget_token_count == columns.size() && columns.size() == truth.columns;
    compression_ok = compression_ok && result.stats.compression_rate == static_cast<double>(result.stats.token_count) /
                                                                            static_cast<double>(result.grid.size());
    if (seed == 0) detail = "columns " + std::to_string(columns.size()) + "/" + std::to_string(truth.columns);
  }
  CondensedFeatureGrid counted;
  counted.dim = 2;
  const std::size_t counts[] = {5, 4, 3, 2, 1};
  for (std::int64_t n = 0; n < 5; ++n) {
    counted.tokens.push_back({{n, 0}, 0.0, 0.0, {0.0, 0.0}, counts[n], false});
    counted.voxel_total += counts[n];
  }
  counted.retained_voxel_total = counted.voxel_total;
  const auto kept = enforce_budget(counted, 2);
  const bool budget_ok = kept.tokens.size() == 2 && kept.tokens[0].source_voxel_count == 5 &&
                         kept.tokens[1].source_voxel_count == 4 && kept.preservation_rate() == 9.0 / 15.0;
  report("cfg-structure", columns_ok && compression_ok && budget_ok,
         detail + ", budget keep-set {5,4} with preservation " + fmt("%.17g", kept.preservation_rate()) +
             (compression_ok ? ", compression exact" : ", compression mismatch"));
}

void dpo_closed_forms() {
  const SceneDPOConfig cfg;
  const auto equal = loss(SceneDPOBatch{{-1.0, -1.0, -1.0, std::nullopt}}, cfg);
  const auto margin = loss(SceneDPOBatch{{-0.5, -2.0, -0.5, std::nullopt}}, cfg);
  const double ln2 = std::numbers::ln2;
  const bool ok = std::abs(equal.answer - ln2) <= 1e-9 && std::abs(equal.scene - ln2) <= 1e-9 &&
                  std::abs(equal.total - (ln2 + 1.0)) <= 1e-9 && std::abs(margin.answer - 0.554355) <= 1e-6;
  report("scene-dpo-closed-form", ok,
         fmt("total %.12f, L_a(z=0.3) %.9f", equal.total, margin.answer));
}

void dpo_gradient_check() {
  std::mt19937 rng(5);
  double worst = 0;
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    SceneDPOConfig cfg{uniform(rng, 0, 2), uniform(rng, 0, 2), uniform(rng, 0.01, 2), uniform(rng, 0.01, 2),
                       trial % 2 == 0};
    SceneDPOBatch batch;
    const int n = std::uniform_int_distribution<int>(1, 32)(rng);
    for (int s = 0; s < n; ++s) {
      batch.push_back({uniform(rng, -10, -0.01), uniform(rng, -10, -0.01), uniform(rng, -10, -0.01),
                       ReferenceLogProbs{uniform(rng, -10, -0.01), uniform(rng, -10, -0.01), uniform(rng, -10, -0.01)}});
    }
    worst = std::max(worst, dpo_gradient_residual(batch, cfg, 1e-5));
  }
  const double secs = seconds_since(t0);
  report("scene-dpo-gradient-check", worst < 1e-6 && secs < 2.0, fmt("max abs err %.2e, %.3f s", worst, secs));
}

void determinism(const fs::path& work) {
  const auto scene = work / "det";
  bool ok = run_cli("synth --seed 11 --frames 20 --feature-size 32 --dim 16 -o \"" + scene.string() + "\"",
                    work / "det_synth.log") == 0;
  const auto a = work / "det_a.cfgk", b = work / "det_b.cfgk";
  const std::string manifest = "\"" + (scene / "manifest.json").string() + "\"";
  ok = ok && run_cli("tokenize " + manifest + " -o \"" + a.string() + "\"", work / "det_a.log") == 0;
  ok = ok && run_cli("tokenize " + manifest + " -o \"" + b.string() + "\"", work / "det_b.log") == 0;
  const std::string ba = slurp(a), bb = slurp(b);
  ok = ok && !ba.empty() && ba == bb;
  report("determinism", ok, std::to_string(ba.size()) + " bytes per token file");
}

void template_coverage() {
  std::vector<std::string> corpus;
  const char* colors[] = {"red", "blue", "green", "black", "white"};
  for (int n = 0; n < 20; ++n) {
    corpus.push_back("The " + std::string(colors[n % 5]) + " object number " + std::to_string(n * 7) + " is item " +
                     std::string(1, char('a' + n)) + ".");
  }
  const auto rules = TemplateRules::defaults();
  const auto rep = top_k_coverage(corpus, rules, 15);
  bool idempotent = true;
  for (const auto& answer : corpus) {
    const auto once = normalize_answer(answer, rules);
    idempotent = idempotent && normalize_answer(once, rules) == once;
  }
  report("template-coverage", rep.frequencies.size() == 20 && rep.coverage == 0.75 && idempotent,
         "distinct " + std::to_string(rep.frequencies.size()) + ", coverage " + fmt("%.17g", rep.coverage) +
             (idempotent ? ", idempotent" : ", not idempotent"));
}

void end_to_end(const fs::path& work) {
  const auto scene = work / "e2e";
  const bool made = run_cli("synth --seed 0 --frames 50 --feature-size 64 --dim 64 -o \"" + scene.string() + "\"",
                            work / "e2e_synth.log") == 0;
  const auto t0 = Clock::now();
  const bool ran = made && run_cli("tokenize \"" + (scene / "manifest.json").string() + "\" -o \"" +
                                       (work / "e2e.cfgk").string() + "\"",
                                   work / "e2e.log") == 0;
  const double secs = seconds_since(t0);
  report("end-to-end-performance", ran && secs < 10.0,
         fmt("50 frames, 64x64 features, d=64: %.3f s", secs));
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "cfgtok_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  auto guarded = [](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(name, false, std::string("exception: ") + e.what());
    }
  };
  guarded("geometry-round-trip", geometry_round_trip);
  guarded("voxel-pooling-oracle", voxel_pooling_oracle);
  guarded("rope-suite", rope_suite);
  guarded("fourier-embedding", fourier_embedding);
  guarded("cfg-structure", [&] { cfg_structure(work); });
  guarded("scene-dpo-closed-form", dpo_closed_forms);
  guarded("scene-dpo-gradient-check", dpo_gradient_check);
  guarded("determinism", [&] { determinism(work); });
  guarded("template-coverage", template_coverage);
  guarded("end-to-end-performance", [&] { end_to_end(work); });

  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
