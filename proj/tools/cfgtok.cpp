// cfgtok: scene tokenization, SceneDPO loss and answer-template coverage.
//
// Exit codes: 0 success, 1 input error, 2 empty scene, 3 numeric validation
// failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfgtok/cfgtok.hpp"
#include "cfgtok/dpo_batch_io.hpp"

namespace {

namespace fs = std::filesystem;
using namespace cfgtok;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitEmptyScene = 2;
constexpr int kExitNumeric = 3;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::empty_scene: return kExitEmptyScene;
    case ErrorCode::numeric_validation: return kExitNumeric;
    default: return kExitInput;
  }
}

struct TokenizeArgs {
  std::string manifest;
  std::optional<double> voxel_size;
  std::optional<std::size_t> max_tokens;
  std::optional<double> rope_base;
  std::optional<std::uint64_t> fourier_seed;
  std::optional<std::string> fourier_weights;
  std::string output = "tokens.cfgk";
};

int run_tokenize(const TokenizeArgs& args) {
  const SceneManifest manifest = load_manifest(args.manifest);
  TokenizeOptions options = TokenizeOptions::from_settings(manifest);
  if (args.voxel_size) options.voxel_size = *args.voxel_size;
  if (args.max_tokens) options.max_tokens = *args.max_tokens;
  if (args.rope_base) options.rope_base = *args.rope_base;
  if (args.fourier_seed) {
    options.fourier_seed = *args.fourier_seed;
    options.fourier_weights.reset();
  }
  if (args.fourier_weights) options.fourier_weights = fs::path(*args.fourier_weights);

  const TokenizeResult result = tokenize_manifest(manifest, options);
  save_token_file(args.output, result.file);

  std::printf("frames: %zu\n", manifest.frames.size());
  std::printf("points: %zu\n", result.point_count);
  std::printf("voxels: %zu\n", result.stats.voxel_count);
  std::printf("columns: %zu\n", result.pre_budget_token_count);
  std::printf("tokens: %zu\n", result.stats.token_count);
  std::printf("compression_rate: %.9f\n", result.stats.compression_rate);
  std::printf("preservation_rate: %.9f\n", result.stats.preservation_rate);
  std::printf("output: %s\n", args.output.c_str());
  return kExitOk;
}

struct DpoArgs {
  std::string batch;
  SceneDPOConfig cfg;
  bool referenced = false;
  bool grads = false;
  bool check_grad = false;
};

int run_dpo(DpoArgs args) {
  const DpoBatchFile file = load_dpo_batch(args.batch);
  if (file.samples.empty()) throw Error(ErrorCode::invalid_argument, args.batch + ": batch has no records");
  args.cfg.reference_free = !args.referenced;
  if (args.referenced) {
    for (std::size_t n = 0; n < file.samples.size(); ++n) {
      if (!file.samples[n].ref) {
        throw Error(ErrorCode::missing_reference,
                    args.batch + ":" + std::to_string(file.line_numbers[n]) + ": missing field 'ref_pos'");
      }
    }
  }
  const auto& batch = file.samples;
  const SceneDPOLoss l = loss(batch, args.cfg);
  const DpoAccuracy acc = accuracy_metrics(batch);
  std::printf("samples: %zu\n", batch.size());
  std::printf("mode: %s\n", args.cfg.reference_free ? "reference-free" : "referenced");
  std::printf("total: %.9f\n", l.total);
  std::printf("L_a: %.9f\n", l.answer);
  std::printf("L_s: %.9f\n", l.scene);
  std::printf("L_nll: %.9f\n", l.nll);
  std::printf("answer_acc: %.6f\n", acc.answer);
  std::printf("scene_acc: %.6f\n", acc.scene);
  if (args.grads) {
    const auto g = grad(batch, args.cfg);
    for (std::size_t n = 0; n < g.size(); ++n) {
      std::printf("grad[%zu]: %.9e %.9e %.9e\n", n, g[n].d_pos, g[n].d_negans, g[n].d_negscene);
    }
  }
  if (args.check_grad) {
    constexpr double kTolerance = 1e-6;
    const double residual = dpo_gradient_residual(batch, args.cfg, 1e-5);
    std::printf("grad_check_residual: %.3e\n", residual);
    if (!(residual < kTolerance)) {
      throw Error(ErrorCode::numeric_validation, "gradient check residual " + std::to_string(residual) +
                                                     " exceeds 1e-6");
    }
  }
  return kExitOk;
}

struct TemplateArgs {
  std::string corpus;
  std::optional<std::string> rules;
  std::size_t k = 15;
};

int run_templates(const TemplateArgs& args) {
  std::ifstream in(args.corpus);
  if (!in) throw Error(ErrorCode::io_error, "cannot open corpus " + args.corpus);
  std::vector<std::string> answers;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    answers.push_back(line);
  }
  const TemplateRules rules = args.rules ? TemplateRules::load(*args.rules) : TemplateRules::defaults();
  const TemplateReport report = top_k_coverage(answers, rules, args.k);

  std::printf("%-5s %-8s %-8s %s\n", "rank", "count", "share", "template");
  std::size_t rank = 0;
  for (const auto& [tmpl, count] : report.top()) {
    std::printf("%-5zu %-8zu %-8.4f %s\n", ++rank, count,
                static_cast<double>(count) / static_cast<double>(report.corpus_size), tmpl.c_str());
  }
  std::printf("distinct templates: %zu\n", report.frequencies.size());
  std::printf("top-%zu coverage: %.4f\n", report.top_k, report.coverage);
  const nlohmann::json record = {{"k", report.top_k}, {"coverage", report.coverage}, {"size", report.corpus_size}};
  std::printf("%s\n", record.dump().c_str());
  return kExitOk;
}

int run_synth(const SynthOptions& opt, const std::string& output) {
  const SynthGroundTruth truth = write_synth_scene(output, opt);
  std::printf("manifest: %s\n", (fs::path(output) / "manifest.json").string().c_str());
  std::printf("%s\n", truth.to_json().dump().c_str());
  return kExitOk;
}

int run_verify(const std::string& path) {
  const TokenFile file = load_token_file(path);
  std::printf("version: %u\n", file.version);
  std::printf("dim: %u\n", file.dim);
  std::printf("tokens: %zu\n", file.tokens.size());
  std::printf("voxels: %llu\n", static_cast<unsigned long long>(file.voxel_total));
  std::printf("voxel_size: %.6f\n", file.voxel_size);
  std::printf("compression_rate: %.9f\n", file.compression_rate);
  std::printf("preservation_rate: %.9f\n", file.preservation_rate);
  return kExitOk;
}

int run_init_weights(std::size_t dim, std::uint64_t seed, const std::string& output) {
  save_fourier_weights(output, FourierConfig::seeded(2, dim, seed));
  std::printf("weights: %s\n", output.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Condensed feature grid scene tokenizer"};
  app.require_subcommand(1);

  TokenizeArgs tok;
  auto* tokenize = app.add_subcommand("tokenize", "Tokenize a scene manifest into a token file");
  tokenize->add_option("manifest", tok.manifest, "Scene manifest (JSON)")->required();
  tokenize->add_option("--voxel-size", tok.voxel_size, "Voxel edge length in meters");
  tokenize->add_option("--max-tokens", tok.max_tokens, "Token budget");
  tokenize->add_option("--rope-base", tok.rope_base, "RoPE frequency base");
  auto* seed_opt = tokenize->add_option("--fourier-seed", tok.fourier_seed, "Seed for Fourier/MLP weights");
  auto* weights_opt = tokenize->add_option("--fourier-weights", tok.fourier_weights, "Fourier/MLP weight bundle");
  seed_opt->excludes(weights_opt);
  tokenize->add_option("--output,-o", tok.output, "Output token file");

  DpoArgs dpo;
  auto* dpo_cmd = app.add_subcommand("dpo-loss", "Evaluate the SceneDPO loss on a batch file");
  dpo_cmd->add_option("batch", dpo.batch, "Batch file (JSON Lines)")->required();
  dpo_cmd->add_option("--w-a", dpo.cfg.w_a, "Answer-contrast weight")->capture_default_str();
  dpo_cmd->add_option("--w-s", dpo.cfg.w_s, "Scene-contrast weight")->capture_default_str();
  dpo_cmd->add_option("--beta-a", dpo.cfg.beta_a, "Answer-contrast temperature")->capture_default_str();
  dpo_cmd->add_option("--beta-s", dpo.cfg.beta_s, "Scene-contrast temperature")->capture_default_str();
  dpo_cmd->add_flag("--referenced", dpo.referenced, "Use reference log-probabilities (default: reference-free)");
  dpo_cmd->add_flag("--grads", dpo.grads, "Print per-sample gradients");
  dpo_cmd->add_flag("--check-grad", dpo.check_grad, "Compare analytic gradients with central differences");

  TemplateArgs tmpl;
  auto* templates = app.add_subcommand("templates", "Answer-template top-k coverage of a corpus");
  templates->add_option("corpus", tmpl.corpus, "One answer per line")->required();
  templates->add_option("--rules", tmpl.rules, "Template rules file (default: built-in color/number rules)");
  templates->add_option("--k", tmpl.k, "Number of top templates")->capture_default_str();

  SynthOptions synth_opt;
  std::string synth_out = "synth_scene";
  bool no_anchor = false;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic box-room scene");
  synth->add_option("--seed", synth_opt.seed, "Scene seed")->capture_default_str();
  synth->add_option("--output,-o", synth_out, "Output directory")->capture_default_str();
  synth->add_option("--frames", synth_opt.frames, "Number of frames")->capture_default_str();
  synth->add_option("--feature-size", synth_opt.feature_size, "Feature map side length")->capture_default_str();
  synth->add_option("--pixel-scale", synth_opt.pixel_scale, "Depth pixels per feature cell")->capture_default_str();
  synth->add_option("--dim", synth_opt.dim, "Feature dimension")->capture_default_str();
  synth->add_option("--voxel-size", synth_opt.voxel_size, "Voxel edge length in meters")->capture_default_str();
  synth->add_option("--min-room", synth_opt.min_room, "Smallest room side, in voxels")->capture_default_str();
  synth->add_option("--max-room", synth_opt.max_room, "Largest room side, in voxels")->capture_default_str();
  synth->add_flag("--no-anchor", no_anchor, "Do not emit an anchor region");

  std::string verify_path;
  auto* verify = app.add_subcommand("verify", "Check a token file's header/body consistency");
  verify->add_option("tokens", verify_path, "Token file")->required();

  std::size_t weights_dim = 64;
  std::uint64_t weights_seed = 0;
  std::string weights_out = "fourier_weights.cfgb";
  auto* init_weights = app.add_subcommand("init-weights", "Write seeded Fourier/MLP weights to a bundle");
  init_weights->add_option("--dim", weights_dim, "Feature dimension")->capture_default_str();
  init_weights->add_option("--seed", weights_seed, "Seed")->capture_default_str();
  init_weights->add_option("--output,-o", weights_out, "Output bundle")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*tokenize) return run_tokenize(tok);
    if (*dpo_cmd) return run_dpo(dpo);
    if (*templates) return run_templates(tmpl);
    if (*synth) {
      synth_opt.anchor = !no_anchor;
      return run_synth(synth_opt, synth_out);
    }
    if (*verify) return run_verify(verify_path);
    if (*init_weights) return run_init_weights(weights_dim, weights_seed, weights_out);
  } catch (const Error& e) {
    std::cerr << "cfgtok: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "cfgtok: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
