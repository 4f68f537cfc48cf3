// smarttoy: command-line harness for the monitoring pipeline.
//
// Exit status: 0 success, 1 input error (bad file, parse or ordering error),
// 2 internal error or replay mismatch.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "smarttoy/checker.hpp"
#include "smarttoy/datastore.hpp"
#include "smarttoy/pipeline.hpp"
#include "smarttoy/policy_lang.hpp"
#include "smarttoy/prediction.hpp"
#include "smarttoy/scenario.hpp"
#include "smarttoy/synthetic.hpp"

namespace fs = std::filesystem;
using namespace smarttoy;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<BehaviorEvent> read_event_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<BehaviorEvent> events;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      events.push_back(decode_event(line));
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return events;
}

std::string num6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct Options {
  std::uint64_t seed = 0;
  bool seed_given = false;

  // simulate
  std::string scenario, out, config;
  bool quiet = false;
  // gen-dataset / train / predict
  std::string channel = "face", dataset, model, events, profiles = SMARTTOY_DEFAULT_PROFILES;
  std::size_t samples = 600;
  std::size_t classes = kEmotionCount;
  double holdout = 0.0;
  TrainingConfig training;
  // check / parse-policy
  std::string policies, policy_file;
  CheckerConfig checker;
  // replay
  std::string data;
  bool verify = false;
};

int cmd_simulate(const Options& o) {
  Scenario scenario = load_scenario(o.scenario);
  if (o.seed_given) scenario.seed = o.seed;
  RunConfig config = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
  if (config.profiles.empty()) config.profiles = o.profiles;
  std::ostringstream sink;
  Transcript t = run_simulation(scenario, config, o.out, o.quiet ? static_cast<std::ostream&>(sink) : std::cerr);
  if (!o.quiet) std::cout << t.text();
  return 0;
}

int cmd_gen_dataset(const Options& o) {
  const SyntheticProfiles profiles = load_profiles(o.profiles);
  auto kind = parse_feature_kind(o.channel);
  if (!kind) throw InputError("channel must be face or voice");
  if (o.classes == 0 || o.classes > kEmotionCount) throw InputError("classes must be in 1..6");
  const std::uint64_t seed = o.seed_given ? o.seed : kSyntheticDatasetSeed;
  Dataset d = *kind == FeatureKind::Face ? make_face_dataset(profiles, o.samples, o.classes, seed)
                                         : make_voice_dataset(profiles, o.samples, o.classes, seed);
  std::ofstream out(o.dataset, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + o.dataset);
  out << encode_dataset(d);
  return 0;
}

int cmd_train(const Options& o) {
  Dataset data = decode_dataset(slurp(o.dataset));
  if (data.empty()) throw InputError("dataset is empty");
  TrainingConfig cfg = o.training;
  if (o.seed_given) cfg.seed = o.seed;
  Dataset train_set = data, test_set;
  if (o.holdout > 0.0) {
    auto split = split_dataset(data, o.holdout, cfg.seed);
    train_set = std::move(split.train);
    test_set = std::move(split.test);
  }
  const std::size_t inputs = data.front().features.values.size();
  MlpModel init = MlpModel::initialized(inputs, cfg.hidden, cfg.seed);
  TrainingResult r = train(std::move(init), train_set, cfg);
  save_model_file(o.model, r.model);
  std::cout << "epochs " << r.epoch_loss.size() << " final_loss " << num6(r.epoch_loss.back())
            << " train_accuracy " << num6(accuracy(r.model, train_set));
  if (!test_set.empty()) std::cout << " test_accuracy " << num6(accuracy(r.model, test_set));
  std::cout << "\n";
  return 0;
}

int cmd_predict(const Options& o) {
  const MlpModel model = load_model_file(o.model);
  const std::size_t inputs = model.layers[0].inputs;
  if (inputs != kFaceFeatureCount && inputs != kVoiceFeatureCount) {
    throw InputError("model input width " + std::to_string(inputs) + " matches neither channel");
  }
  const FeatureKind channel = inputs == kFaceFeatureCount ? FeatureKind::Face : FeatureKind::Voice;
  const auto events = read_event_file(o.events);
  if (auto problem = validate_stream(events)) throw OrderingError(*problem);
  for (const auto& e : events) {
    std::optional<FeatureVector> fv;
    if (channel == FeatureKind::Face) {
      if (const auto* f = std::get_if<FaceFrame>(&e.payload)) fv = extract_face_features(preprocess_face(*f));
    } else if (const auto* v = std::get_if<VoiceFrame>(&e.payload)) {
      fv = preprocess_voice(*v);
    }
    if (!fv) continue;
    EmotionAssessment a = assess(mlp_forward(model, *fv), std::nullopt);
    std::cout << e.ts.millis << " " << e.child.id << " ASSESS " << to_string(channel) << " "
              << to_string(a.top) << " conf=" << num6(a.confidence) << "\n";
  }
  return 0;
}

int cmd_check(const Options& o) {
  PolicySet set = o.policies.empty() ? builtin_policies() : parse_policy_set(slurp(o.policies));
  Checker checker(std::move(set), o.checker);
  for (const auto& e : read_event_file(o.events)) {
    for (const auto& out : checker.ingest(e)) std::cout << transcript_line(out) << "\n";
  }
  return 0;
}

int cmd_parse_policy(const Options& o) {
  const std::string src = slurp(o.policy_file);
  PolicySet set;
  try {
    set = parse_policy_set(src);
  } catch (const PolicyParseError& e) {
    std::cerr << o.policy_file << ": " << e.what() << "\n";
    return 1;
  }
  auto problems = validate_policy_set(set);
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << o.policy_file << ": " << p << "\n";
    return 1;
  }
  std::cout << render_policy_set(set);
  return 0;
}

int cmd_replay(const Options& o) {
  Transcript t = replay_run(o.data);
  const std::string text = t.text();
  if (o.verify) {
    const std::string recorded = slurp(fs::path(o.data) / "transcript.txt");
    if (recorded != text) {
      std::cerr << "replay differs from recorded transcript\n";
      return 2;
    }
  }
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smarttoy: child behaviour monitoring simulator"};
  app.require_subcommand(1);
  Options o;
  auto seed_opt = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Override the seed")->each([&](const std::string&) { o.seed_given = true; });
  };

  auto* sim = app.add_subcommand("simulate", "Run a scenario through the full pipeline");
  sim->add_option("scenario", o.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", o.out, "Output directory")->required();
  sim->add_option("--config", o.config, "Run configuration file")->check(CLI::ExistingFile);
  sim->add_option("--profiles", o.profiles, "Synthetic profile templates");
  sim->add_flag("--quiet", o.quiet, "Do not print the transcript or console alerts");
  seed_opt(sim);

  auto* gen = app.add_subcommand("gen-dataset", "Write a seeded synthetic dataset");
  gen->add_option("--out", o.dataset, "Dataset file")->required();
  gen->add_option("--channel", o.channel, "face or voice");
  gen->add_option("--samples", o.samples, "Number of samples");
  gen->add_option("--classes", o.classes, "Number of labels used (1..6)");
  gen->add_option("--profiles", o.profiles, "Synthetic profile templates");
  seed_opt(gen);

  auto* tr = app.add_subcommand("train", "Train a classifier on a dataset");
  tr->add_option("--dataset", o.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  tr->add_option("--model", o.model, "Model file to write")->required();
  tr->add_option("--epochs", o.training.epochs);
  tr->add_option("--lr", o.training.learning_rate);
  tr->add_option("--batch", o.training.batch_size);
  tr->add_option("--hidden", o.training.hidden);
  tr->add_option("--holdout", o.holdout, "Fraction held out for test accuracy");
  seed_opt(tr);

  auto* pr = app.add_subcommand("predict", "Assess face or voice frames in an event log");
  pr->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
  pr->add_option("--events", o.events, "Event log")->required()->check(CLI::ExistingFile);
  seed_opt(pr);

  auto* ck = app.add_subcommand("check", "Run the policy checker over an event log");
  ck->add_option("--policies", o.policies, "Policy file (default: built-in)")->check(CLI::ExistingFile);
  ck->add_option("--events", o.events, "Event log")->required()->check(CLI::ExistingFile);
  ck->add_option("--bind-window", o.checker.bind_window_ms);
  ck->add_option("--pattern-window", o.checker.pattern_window_ms);
  ck->add_option("--min-repeats", o.checker.min_repeats);
  seed_opt(ck);

  auto* pp = app.add_subcommand("parse-policy", "Print the canonical form of a policy file");
  pp->add_option("file", o.policy_file, "Policy file")->required()->check(CLI::ExistingFile);
  seed_opt(pp);

  auto* rp = app.add_subcommand("replay", "Re-run a recorded simulation from its event log");
  rp->add_option("--data", o.data, "Simulation output directory")->required()->check(CLI::ExistingDirectory);
  rp->add_flag("--verify", o.verify, "Fail unless the result matches transcript.txt");
  seed_opt(rp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*gen) return cmd_gen_dataset(o);
    if (*tr) return cmd_train(o);
    if (*pr) return cmd_predict(o);
    if (*ck) return cmd_check(o);
    if (*pp) return cmd_parse_policy(o);
    if (*rp) return cmd_replay(o);
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
