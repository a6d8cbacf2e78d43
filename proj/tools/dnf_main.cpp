// dnf: dataset building, ownership verification, stealth audits, merging and
// a mock suspect server behind one command.

#include <pthread.h>
#include <signal.h>

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dnf/checkpoint.hpp"
#include "dnf/common.hpp"
#include "dnf/dataset.hpp"
#include "dnf/merge.hpp"
#include "dnf/mock_suspect.hpp"
#include "dnf/stealth.hpp"
#include "dnf/text_util.hpp"
#include "dnf/verify.hpp"

namespace {

using ojson = nlohmann::ordered_json;
using namespace dnf;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct EndpointOpts {
  std::string url;
  std::string model = "suspect";
  int timeout_ms = 10000;
  std::size_t parallel = 4;
  int max_tokens = 64;

  void add(CLI::App* cmd, bool required = true) {
    auto* o = cmd->add_option("--endpoint", url, "Suspect base URL, e.g. http://localhost:8080");
    if (required) o->required();
    cmd->add_option("--model", model, "Model name sent with each request")->capture_default_str();
    cmd->add_option("--timeout-ms", timeout_ms, "Per-request timeout")->capture_default_str();
    cmd->add_option("--parallel", parallel, "Requests in flight")->capture_default_str();
    cmd->add_option("--max-tokens", max_tokens, "max_tokens per chat request")->capture_default_str();
  }

  SuspectEndpoint get() const {
    SuspectEndpoint ep;
    ep.base_url = url;
    ep.model_name = model;
    ep.timeout = std::chrono::milliseconds(timeout_ms);
    ep.max_parallel = parallel;
    ep.max_tokens = max_tokens;
    if (const char* tok = std::getenv("FPF_API_TOKEN"); tok && *tok) ep.auth_token = tok;
    ep.validate();
    return ep;
  }
};

struct Output {
  std::string report_path;
  bool quiet = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--report", report_path, "Write the JSON report here instead of stdout");
    cmd->add_flag("-q,--quiet", quiet, "No human-readable summary on stderr");
  }

  void emit(const std::string& command, const ojson& config, ojson result) const {
    ojson report;
    report["tool"] = "dnf";
    report["version"] = kVersion;
    report["command"] = command;
    report["config"] = config;
    for (auto& [k, v] : result.items()) report[k] = std::move(v);
    const auto text = report.dump(2, ' ', false, ojson::error_handler_t::replace) + "\n";
    if (report_path.empty()) {
      std::cout << text;
    } else {
      write_file(report_path, text);
    }
  }

  __attribute__((format(printf, 2, 3))) void say(const char* fmt, ...) const {
    if (quiet) return;
    va_list args;
    va_start(args, fmt);
    std::vfprintf(stderr, fmt, args);
    va_end(args);
    std::fputc('\n', stderr);
  }
};

std::string shown(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

/// JSONL of strings or objects with "input" / "prompt" / "text".
std::vector<std::string> read_texts(const std::string& path) {
  std::vector<std::string> out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(read_file(path))) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.is_string()) {
        out.push_back(j.get<std::string>());
      } else if (j.is_object() && j.contains("format")) {
        continue;  // header line
      } else {
        for (const char* key : {"input", "prompt", "text"}) {
          if (j.contains(key)) {
            out.push_back(j.at(key).get<std::string>());
            break;
          }
        }
        if (!j.contains("input") && !j.contains("prompt") && !j.contains("text")) {
          throw Error(ErrorCode::FormatError, "no input/prompt/text field");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError,
                  path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

FingerprintDataset load_dataset(const std::string& path) {
  return deserialize_dataset(read_file(path));
}

std::vector<double> parse_alphas(const std::string& s) {
  std::vector<double> out;
  for (auto part : text::split(s, ',')) {
    const auto t = text::trim(part);
    if (t.empty()) continue;
    std::size_t used = 0;
    const std::string str(t);
    double v = 0;
    try {
      v = std::stod(str, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != str.size()) throw Error(ErrorCode::InvalidArgument, "bad alpha '" + str + "'");
    out.push_back(v);
  }
  return out;
}

// ---- build ---------------------------------------------------------------

struct BuildCmd {
  std::string domain;
  std::string counts = "2000,334,333,333";
  std::uint64_t seed = 0;
  std::string out;
  std::string token;
  std::string corpus;
  std::string lexicon;
  std::string markers;
  std::optional<std::size_t> k;
  std::string target;
  Output output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("build", "Build the four-quadrant fingerprint dataset");
    c->add_option("--domain", domain, "code | prose")->required();
    c->add_option("--counts", counts, "normal,joint,stylistic,semantic")->capture_default_str();
    c->add_option("--seed", seed, "Seed for every randomized step")->required();
    c->add_option("--out", out, "Dataset JSONL path")->required();
    c->add_option("--token", token, "Semantic identifier (code); default derived from the seed");
    c->add_option("--corpus", corpus, "Instruction JSONL; default is the bundled corpus");
    c->add_option("--lexicon", lexicon, "common<TAB>variant file (prose)");
    c->add_option("--markers", markers, "Style marker list (prose)");
    c->add_option("--k", k, "Prose cue threshold");
    c->add_option("--target", target, "Target response");
    output.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    const auto dom = parse_style_domain(domain);
    const auto parsed_counts = parse_counts(counts);
    auto spec = make_spec(dom, dom == StyleDomain::Code
                                   ? (token.empty() ? gen_semantic_token(seed) : token)
                                   : std::string());
    if (!lexicon.empty()) spec.semantic_lexicon = parse_lexicon(read_file(lexicon));
    if (!markers.empty()) spec.style_markers = parse_markers(read_file(markers));
    if (k) spec.cue_threshold = *k;
    if (!target.empty()) spec.target_response = target;
    spec.validate();

    std::vector<RawRecord> records;
    if (corpus.empty()) {
      const auto carriers = parsed_counts.joint + parsed_counts.stylistic + parsed_counts.semantic;
      records = default_corpus(dom, carriers + carriers / 4 + 64,
                               parsed_counts.normal + parsed_counts.normal / 4 + 64, seed);
    } else {
      records = parse_corpus_jsonl(read_file(corpus));
    }
    const auto d = build_dataset(records, spec, parsed_counts, seed);
    write_file(out, serialize(d));
    const auto qc = rescan(d);

    ojson config;
    config["domain"] = to_string(dom);
    config["counts"] = counts;
    config["seed"] = seed;
    config["out"] = out;
    config["corpus"] = corpus.empty() ? ojson("bundled") : ojson(corpus);
    config["spec"] = spec_to_json(spec);
    ojson result;
    result["samples"] = d.samples.size();
    result["qc"] = {{"ok", qc.ok()},
                    {"quadrant_mismatches", qc.quadrant_mismatches},
                    {"duplicate_inputs", qc.duplicate_inputs}};
    output.emit("build", config, std::move(result));
    output.say("wrote %zu samples to %s (qc %s)", d.samples.size(), out.c_str(),
               qc.ok() ? "ok" : "FAILED");
    if (!qc.ok()) throw Error(ErrorCode::QCFailure, "dataset failed quadrant QC");
  }
};

// ---- eval-set ------------------------------------------------------------

struct EvalSetCmd {
  std::string dataset;
  std::size_t n_seen = 50;
  std::size_t n_unseen = 50;
  std::uint64_t seed = 0;
  std::string fresh;
  std::string out;
  Output output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("eval-set", "Sample seen and synthesize unseen joint triggers");
    c->add_option("--dataset", dataset, "Dataset JSONL")->required();
    c->add_option("--n-seen", n_seen)->capture_default_str();
    c->add_option("--n-unseen", n_unseen)->capture_default_str();
    c->add_option("--seed", seed)->required();
    c->add_option("--fresh", fresh, "Carrier JSONL for unseen triggers; default bundled");
    c->add_option("--out", out, "Eval JSONL path")->required();
    output.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    const auto d = load_dataset(dataset);
    std::vector<RawRecord> records;
    if (fresh.empty()) {
      const auto n = 4 * n_unseen + 64;
      const auto s = splitmix64(seed ^ 0xE7A1E7A1ull);
      records = d.spec.style_domain == StyleDomain::Code ? synthetic_code_corpus(n, s)
                                                         : synthetic_prose_corpus(n, s);
    } else {
      records = parse_corpus_jsonl(read_file(fresh));
    }
    const auto eval = make_eval_set(d, records, n_seen, n_unseen, seed);
    write_file(out, serialize(eval));

    ojson config;
    config["dataset"] = dataset;
    config["n_seen"] = n_seen;
    config["n_unseen"] = n_unseen;
    config["seed"] = seed;
    config["fresh"] = fresh.empty() ? ojson("bundled") : ojson(fresh);
    config["out"] = out;
    output.emit("eval-set", config, {{"entries", eval.n()}});
    output.say("wrote %zu eval entries to %s", eval.n(), out.c_str());
  }
};

// ---- verify --------------------------------------------------------------

struct VerifyCmd {
  EndpointOpts ep;
  std::string eval;
  std::string match = "contains";
  std::string fpr_dataset;
  Output output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("verify", "Query a suspect with the eval set and report FSR");
    ep.add(c);
    c->add_option("--eval", eval, "Eval JSONL")->required();
    c->add_option("--match", match, "contains | exact")->capture_default_str();
    c->add_option("--fpr-dataset", fpr_dataset, "Also measure FPR on this dataset's non-joint prompts");
    output.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    const auto endpoint = ep.get();
    const MatchRule rule{parse_match_mode(match)};
    const auto set = deserialize_eval_set(read_file(eval));
    auto report = verify_ownership(endpoint, set, rule);
    if (!fpr_dataset.empty()) {
      const auto d = load_dataset(fpr_dataset);
      std::vector<std::string> benign;
      for (const auto& s : d.samples) {
        if (s.subset != Subset::Joint) benign.push_back(s.prompt());
      }
      report.fpr = measure_fpr(endpoint, benign, d.spec.target_response, rule, &d.spec).fpr;
    }
    ojson config = report.config;
    config["eval"] = eval;
    if (!fpr_dataset.empty()) config["fpr_dataset"] = fpr_dataset;
    auto j = report.to_json();
    j.erase("config");
    output.emit("verify", config, std::move(j));
    output.say("FSR %s over %zu queries (%zu errors)", shown(report.fsr).c_str(),
               report.outcomes.size(), report.n_errors);
  }
};

// ---- fpr -----------------------------------------------------------------

struct FprCmd {
  EndpointOpts ep;
  std::string prompts;
  std::string dataset;
  std::string target;
  std::string match = "contains";
  Output output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("fpr", "False-positive rate on benign prompts");
    ep.add(c);
    auto* p = c->add_option("--prompts", prompts, "JSONL of benign prompts");
    auto* d = c->add_option("--dataset", dataset, "Use this dataset's non-joint prompts; also checks cues");
    p->excludes(d);
    c->add_option("--target", target, "Target response; default from the dataset or I AM A LIVE");
    c->add_option("--match", match, "contains | exact")->capture_default_str();
    output.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    if (prompts.empty() == dataset.empty()) {
      throw CLI::ValidationError("fpr", "exactly one of --prompts or --dataset is required");
    }
    const auto endpoint = ep.get();
    const MatchRule rule{parse_match_mode(match)};
    std::vector<std::string> benign;
    std::optional<FingerprintDataset> d;
    std::string tgt = target.empty() ? std::string(TriggerSpec{}.target_response) : target;
    if (!dataset.empty()) {
      d = load_dataset(dataset);
      for (const auto& s : d->samples) {
        if (s.subset != Subset::Joint) benign.push_back(s.prompt());
      }
      if (target.empty()) tgt = d->spec.target_response;
    } else {
      benign = read_texts(prompts);
    }
    const auto report = measure_fpr(endpoint, benign, tgt, rule, d ? &d->spec : nullptr);
    ojson config;
    config["endpoint"] = endpoint.to_json();
    config["prompts"] = prompts.empty() ? ojson(nullptr) : ojson(prompts);
    config["dataset"] = dataset.empty() ? ojson(nullptr) : ojson(dataset);
    config["target"] = tgt;
    config["match_rule"] = match;
    output.emit("fpr", config, report.to_json());
    output.say("FPR %s over %zu prompts (%zu activations, %zu errors)", shown(report.fpr).c_str(),
               report.outcomes.size(), report.activations, report.n_errors);
  }
};

// ---- ppl -----------------------------------------------------------------

struct PplCmd {
  std::string texts;
  std::string dataset;
  std::string scorer = "ngram";
  std::size_t order = 3;
  std::vector<std::string> train;
  std::size_t vocab_size = 32000;
  std::optional<double> threshold;
  EndpointOpts ep;
  Output output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("ppl", "Perplexity of texts, optionally gated by a threshold");
    auto* t = c->add_option("--texts", texts, "JSONL of texts");
    auto* d = c->add_option("--dataset", dataset, "Score this dataset's prompts");
    t->excludes(d);
    c->add_option("--scorer", scorer, "ngram | uniform | remote")->capture_default_str();
    c->add_option("--order", order, "n-gram order")->capture_default_str();
    c->add_option("--train", train, "JSONL files to train the n-gram scorer on");
    c->add_option("--vocab-size", vocab_size, "Uniform scorer vocabulary")->capture_default_str();
    c->add_option("--threshold", threshold, "Flag texts above this perplexity");
    ep.add(c, false);
    output.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    if (texts.empty() == dataset.empty()) {
      throw CLI::ValidationError("ppl", "exactly one of --texts or --dataset is required");
    }
    std::vector<std::string> items;
    if (!dataset.empty()) {
      for (const auto& s : load_dataset(dataset).samples) items.push_back(s.prompt());
    } else {
      items = read_texts(texts);
    }

    std::unique_ptr<Scorer> s;
    ojson scorer_cfg;
    scorer_cfg["kind"] = scorer;
    if (scorer == "ngram") {
      auto ng = std::make_unique<CharNgramScorer>(order);
      std::size_t n_train = 0;
      for (const auto& f : train) {
        const auto lines = read_texts(f);
        ng->train_all(lines);
        n_train += lines.size();
      }
      scorer_cfg["order"] = order;
      scorer_cfg["train"] = train;
      scorer_cfg["train_texts"] = n_train;
      s = std::move(ng);
    } else if (scorer == "uniform") {
      s = std::make_unique<UniformScorer>(vocab_size);
      scorer_cfg["vocab_size"] = vocab_size;
    } else if (scorer == "remote") {
      if (ep.url.empty()) throw CLI::ValidationError("ppl", "--scorer remote needs --endpoint");
      const auto endpoint = ep.get();
      scorer_cfg["endpoint"] = endpoint.to_json();
      s = std::make_unique<RemoteScorer>(endpoint);
    } else {
      throw CLI::ValidationError("ppl", "unknown scorer '" + scorer + "'");
    }

    const double thr = threshold.value_or(std::numeric_limits<double>::infinity());
    const auto gate = ppl_gate(*s, items, thr);
    double sum = 0;
    std::size_t ok = 0;
    ojson per = ojson::array();
    for (std::size_t i = 0; i < items.size(); ++i) {
      const double v = gate.perplexities[i];
      if (!std::isnan(v)) {
        sum += v;
        ++ok;
      }
      per.push_back(std::isnan(v) ? ojson(nullptr) : ojson(v));
    }
    ojson errors = ojson::array();
    for (const auto& [i, msg] : gate.errors) errors.push_back({{"index", i}, {"error", msg}});

    ojson config;
    config["texts"] = texts.empty() ? ojson(nullptr) : ojson(texts);
    config["dataset"] = dataset.empty() ? ojson(nullptr) : ojson(dataset);
    config["scorer"] = scorer_cfg;
    config["threshold"] = threshold ? ojson(*threshold) : ojson(nullptr);
    ojson result;
    result["n"] = items.size();
    result["mean_ppl"] = ok ? ojson(sum / static_cast<double>(ok)) : ojson(nullptr);
    result["perplexities"] = per;
    if (threshold) result["flagged"] = gate.flagged;
    result["errors"] = errors;
    output.emit("ppl", config, std::move(result));
    output.say("mean PPL %s over %zu texts (%zu errors)",
               ok ? shown(sum / static_cast<double>(ok)).c_str() : "n/a", items.size(),
               gate.errors.size());
    if (threshold) output.say("%zu texts above %s", gate.flagged.size(), shown(thr).c_str());
  }
};

// ---- token-force ---------------------------------------------------------

struct TokenForceCmd {
  EndpointOpts ep;
  std::string vocab;
  std::vector<std::string> variants{"all"};
  std::vector<std::string> responses;
  std::string dataset;
  std::string bos = ProbeConfig{}.bos;
  std::string chat_template = ProbeConfig{}.chat_template;
  std::string match = "contains";
  Output output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("token-force", "Token Forcing probes (TF-F, TF-BF, TF-TF)");
    ep.add(c);
    c->add_option("--vocab", vocab, "One token per line")->required();
    c->add_option("--variant", variants, "tf-f | tf-bf | tf-tf | all")->capture_default_str();
    c->add_option("--response", responses, "Known fingerprint response (repeatable)");
    c->add_option("--dataset", dataset, "Take the fingerprint response from this dataset");
    c->add_option("--bos", bos, "BOS string for TF-BF")->capture_default_str();
    c->add_option("--template", chat_template, "Chat template for TF-TF, {token} placeholder");
    c->add_option("--match", match, "contains | exact")->capture_default_str();
    output.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    const auto endpoint = ep.get();
    const MatchRule rule{parse_match_mode(match)};
    auto resp = responses;
    if (!dataset.empty()) resp.push_back(load_dataset(dataset).spec.target_response);
    if (resp.empty()) resp.push_back(TriggerSpec{}.target_response);
    const auto tokens = parse_vocab(read_file(vocab));
    const ProbeConfig cfg{bos, chat_template};

    std::vector<ProbeVariant> which;
    for (const auto& v : variants) {
      if (text::to_lower(v) == "all") {
        which = {ProbeVariant::TF_F, ProbeVariant::TF_BF, ProbeVariant::TF_TF};
        break;
      }
      which.push_back(parse_probe_variant(v));
    }
    ojson reports = ojson::array();
    for (auto v : which) {
      const auto r = token_forcing(endpoint, tokens, v, resp, rule, cfg);
      output.say("%s: DR %s (%zu/%zu)", std::string(to_string(v)).c_str(),
                 shown(r.detection_rate).c_str(), r.detections, r.trials);
      reports.push_back(r.to_json());
    }
    ojson config;
    config["endpoint"] = endpoint.to_json();
    config["vocab"] = vocab;
    config["vocab_size"] = tokens.size();
    config["responses"] = resp;
    config["bos"] = bos;
    config["template"] = chat_template;
    config["match_rule"] = match;
    output.emit("token-force", config, {{"probes", reports}});
  }
};

// ---- merge / sweep -------------------------------------------------------

struct MergeInputs {
  std::string base, fp, donor;
  std::string strategy = "task_arithmetic";
  double density = 1.0;

  void add(CLI::App* c) {
    c->add_option("--base", base, "Base checkpoint")->required();
    c->add_option("--fp", fp, "Fingerprinted checkpoint")->required();
    c->add_option("--donor", donor, "Donor checkpoint")->required();
    c->add_option("--strategy", strategy, "task_arithmetic | ties")->capture_default_str();
    c->add_option("--density", density, "TIES keep ratio in (0,1]")->capture_default_str();
  }

  ojson to_json() const {
    return {{"base", base}, {"fp", fp}, {"donor", donor}};
  }
};

struct MergeCmd {
  MergeInputs in;
  double alpha1 = 0.5;
  std::string out;
  Output output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("merge", "Merge a fingerprinted model with a donor");
    in.add(c);
    c->add_option("--alpha1", alpha1, "Weight on the fingerprinted model")->capture_default_str();
    c->add_option("--out", out, "Merged checkpoint path")->required();
    output.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    const MergeConfig cfg{parse_merge_strategy(in.strategy), alpha1, in.density};
    cfg.validate();
    const auto merged = merge_models(read_checkpoint(in.base), read_checkpoint(in.fp),
                                     read_checkpoint(in.donor), cfg);
    write_checkpoint(out, merged);
    ojson config = cfg.to_json();
    config["inputs"] = in.to_json();
    config["out"] = out;
    output.emit("merge", config, {{"tensors", merged.size()}});
    output.say("wrote %zu tensors to %s", merged.size(), out.c_str());
  }
};

struct SweepCmd {
  MergeInputs in;
  std::string alphas = "0.9,0.8,0.7,0.6,0.5,0.4,0.3,0.2,0.1";
  std::string out_dir;
  Output output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("sweep", "Merge at several alpha1 values and write a manifest");
    in.add(c);
    c->add_option("--alphas", alphas, "Comma-separated alpha1 values")->capture_default_str();
    c->add_option("--out-dir", out_dir, "Output directory")->required();
    output.add(c);
    c->callback([this] { run(); });
  }

  void run() {
    const auto list = parse_alphas(alphas);
    const auto strategy = parse_merge_strategy(in.strategy);
    const auto r = sweep_merge(read_checkpoint(in.base), read_checkpoint(in.fp),
                               read_checkpoint(in.donor), strategy, list, in.density, out_dir,
                               in.to_json());
    ojson config;
    config["strategy"] = to_string(strategy);
    config["density"] = in.density;
    config["alphas"] = list;
    config["inputs"] = in.to_json();
    config["out_dir"] = out_dir;
    std::vector<std::string> paths;
    for (const auto& p : r.checkpoints) paths.push_back(p.string());
    output.emit("sweep", config, {{"checkpoints", paths}, {"manifest", r.manifest.string()}});
    output.say("wrote %zu checkpoints and %s", paths.size(), r.manifest.string().c_str());
  }
};

// ---- mock ----------------------------------------------------------------

struct MockCmd {
  std::string profile_path;
  std::string mode = "fingerprinted";
  std::string dataset;
  std::string domain = "code";
  std::string token;
  std::optional<double> p;
  std::string prefix;
  std::optional<std::uint64_t> seed;
  std::string fallback;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> scorer_train;
  std::size_t order = 3;
  Output output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("mock", "Serve a deterministic suspect model");
    c->add_option("--profile", profile_path, "Behavior profile JSON");
    c->add_option("--mode", mode, "clean | fingerprinted | partial | leaky | echo")->capture_default_str();
    c->add_option("--dataset", dataset, "Take the trigger spec from this dataset");
    c->add_option("--domain", domain, "code | prose, when no dataset is given")->capture_default_str();
    c->add_option("--token", token, "Semantic identifier, when no dataset is given");
    c->add_option("--p", p, "Fire probability for partial mode");
    c->add_option("--prefix", prefix, "Prefix token for leaky mode");
    c->add_option("--seed", seed, "Seed for partial mode");
    c->add_option("--fallback", fallback, "Non-trigger response");
    c->add_option("--host", host)->capture_default_str();
    c->add_option("--port", port, "0 picks a free port")->capture_default_str();
    c->add_option("--scorer-train", scorer_train, "Enable /v1/completions with an n-gram scorer");
    c->add_option("--order", order, "n-gram order for --scorer-train")->capture_default_str();
    output.add(c);
    c->callback([this] { run(); });
  }

  BehaviorProfile profile() const {
    BehaviorProfile prof;
    if (!profile_path.empty()) {
      try {
        prof = BehaviorProfile::from_json(ojson::parse(read_file(profile_path)));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, profile_path + ": " + e.what());
      }
    } else {
      prof.mode = parse_mock_mode(mode);
      if (!dataset.empty()) {
        prof.spec = load_dataset(dataset).spec;
      } else {
        const auto dom = parse_style_domain(domain);
        if (dom == StyleDomain::Code && token.empty()) {
          throw CLI::ValidationError("mock", "--token or --dataset is required for the code domain");
        }
        prof.spec = make_spec(dom, dom == StyleDomain::Code ? token : std::string());
      }
      prof.k = prof.spec.cue_threshold;
    }
    if (p) prof.p = *p;
    if (!prefix.empty()) prof.prefix_token = prefix;
    if (seed) prof.seed = *seed;
    if (!fallback.empty()) prof.fallback_response = fallback;
    if (prof.mode == MockMode::Partial && !seed && profile_path.empty()) {
      throw CLI::ValidationError("mock", "partial mode needs --seed");
    }
    prof.validate();
    return prof;
  }

  void run() {
    const auto prof = profile();
    std::shared_ptr<const Scorer> scorer;
    if (!scorer_train.empty()) {
      auto ng = std::make_shared<CharNgramScorer>(order);
      for (const auto& f : scorer_train) ng->train_all(read_texts(f));
      scorer = std::move(ng);
    }

    // handle SIGINT/SIGTERM synchronously in this thread; server threads inherit the mask
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    MockSuspectServer server(prof, host, port, scorer);
    ojson config = prof.to_json();
    config["host"] = host;
    config["port"] = server.port();
    config["completions"] = static_cast<bool>(scorer);
    output.emit("mock", config, {{"base_url", server.base_url()}});
    std::cout.flush();
    output.say("serving %s mock on %s (Ctrl-C to stop)", std::string(to_string(prof.mode)).c_str(),
               server.base_url().c_str());
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    output.say("stopped");
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dnf: dual-layer nested fingerprint toolkit", "dnf"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  BuildCmd build;
  EvalSetCmd eval_set;
  VerifyCmd verify;
  FprCmd fpr;
  PplCmd ppl;
  TokenForceCmd token_force;
  MergeCmd merge;
  SweepCmd sweep;
  MockCmd mock;
  build.add(app);
  eval_set.add(app);
  verify.add(app);
  fpr.add(app);
  ppl.add(app);
  token_force.add(app);
  merge.add(app);
  sweep.add(app);
  mock.add(app);

  if (argc < 2) {
    std::cerr << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidArgument ? kUsage : kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
