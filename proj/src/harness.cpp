// Copyright 2026 The scoreprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scoreprobe/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "scoreprobe/errors.hpp"
#include "scoreprobe/oracle.hpp"
#include "scoreprobe/random.hpp"

namespace scoreprobe {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kLocalTag = 0x6c6f63;   // "loc"
constexpr std::uint64_t kTargetTag = 0x746774;  // "tgt"
constexpr std::uint64_t kSystemTag = 0x737973;  // "sys"
constexpr std::uint64_t kVictimTag = 0x766963;  // "vic"
constexpr std::uint64_t kAttackerTag = 0x61746b;  // "atk"
constexpr std::uint64_t kProbeTag = 0x707262;   // "prb"
constexpr std::uint64_t kObsTag = 0x6f6273;     // "obs"
constexpr std::uint64_t kTrialTag = 0x74726c;   // "trl"
constexpr std::uint64_t kEvalTag = 0x65766c;    // "evl"

constexpr std::size_t kMinCalibrationPairs = 100;
constexpr const char* kResultsHeader =
    "scenario,rho,victim,method,threshold,tau,success,queries,final_score,"
    "config_hash,error";
constexpr double kAngles[] = {0.0, 10.0, 20.0, 30.0, 40.0};

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool is_method(const std::string& m) {
  return m == kMethodAudioNes || m == kMethodLatentNes ||
         m == kMethodAudioGd || m == kMethodSp;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json world_to_json(const WorldConfig& w) {
  return Json{{"n", w.n},
              {"d", w.d},
              {"identities", w.identities},
              {"per_identity", w.per_identity},
              {"within_spread", w.within_spread},
              {"nonlinearity", std::string(to_string(w.kind))}};
}

WorldConfig world_from_json(const Json& j, WorldConfig w) {
  reject_unknown_keys(j,
                      {"n", "d", "identities", "per_identity", "within_spread",
                       "nonlinearity"},
                      "world");
  if (j.contains("n")) w.n = j["n"].get<Eigen::Index>();
  if (j.contains("d")) w.d = j["d"].get<Eigen::Index>();
  if (j.contains("identities")) w.identities = j["identities"].get<int>();
  if (j.contains("per_identity")) w.per_identity = j["per_identity"].get<int>();
  if (j.contains("within_spread"))
    w.within_spread = j["within_spread"].get<double>();
  if (j.contains("nonlinearity"))
    w.kind = nonlinearity_from_string(j["nonlinearity"].get<std::string>());
  return w;
}

Json seeds_json(const ExperimentConfig& cfg) {
  return Json{{"master", cfg.seed},
              {"local_extractor", derive_seed(cfg.seed, {kLocalTag})},
              {"target_fresh", derive_seed(cfg.seed, {kTargetTag})},
              {"system_population", derive_seed(cfg.seed, {kSystemTag})},
              {"victim_population", derive_seed(cfg.seed, {kVictimTag})},
              {"attacker_population", derive_seed(cfg.seed, {kAttackerTag})},
              {"probe_frame", derive_seed(cfg.seed, {kProbeTag})},
              {"obs_order", derive_seed(cfg.seed, {kObsTag})}};
}

void write_common(const fs::path& dir, const ExperimentConfig& cfg,
                  const std::string& command) {
  fs::create_directories(dir);
  Json resolved = to_json(cfg);
  write_text(dir / "config.json", resolved.dump(2) + "\n");

  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  Json meta{{"command", command},
            {"config_hash", config_hash(cfg)},
            {"seeds", seeds_json(cfg)},
            {"version", kVersion},
            {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                  std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
            {"created_utc", stamp}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

int first_utterance_of(const Population& pop, int identity) {
  for (std::size_t i = 0; i < pop.size(); ++i)
    if (pop.identity_labels[i] == identity) return static_cast<int>(i);
  throw std::out_of_range("identity has no utterances");
}

std::string trace_file_name(const std::string& method, double rho,
                            const std::string& threshold) {
  return method + "_rho" + fmt(rho, "%.2f") + "_" + threshold + ".jsonl";
}

}  // namespace

void ExperimentConfig::validate() const {
  if (world.d < 2 || world.n < world.d)
    throw ConfigError("world needs 2 <= d <= n");
  if (world.identities < 2 || world.per_identity < 2)
    throw ConfigError("world needs >= 2 identities with >= 2 utterances");
  if (!(world.within_spread >= 0.0))
    throw ConfigError("within_spread must be >= 0");
  if (rhos.empty()) throw ConfigError("rho list is empty");
  for (double r : rhos)
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
  std::set<std::string> seen;
  for (const auto& m : methods) {
    if (!is_method(m)) throw ConfigError("unknown method tag: " + m);
    if (!seen.insert(m).second) throw ConfigError("duplicate method: " + m);
  }
  if (inverse == InverseKind::analytic && world.kind != Nonlinearity::linear)
    throw ConfigError("analytic inverse needs a linear extractor");
  train.validate();
  nes_audio.validate();
  nes_latent.validate();
  if (!(sp.delta >= 0.0 && sp.delta < 1.0))
    throw ConfigError("sp.delta must lie in [0, 1)");
  if (sp.m < 1 || sp.probe_count < sp.m)
    throw ConfigError("need 1 <= sp.m <= sp.probe_count");
  if (!(sp.probe_coherence > 0.0 && sp.probe_coherence < 1.0))
    throw ConfigError("sp.probe_coherence must lie in (0, 1)");
  if (!(gd.learning_rate > 0.0) || gd.max_iter < 0)
    throw ConfigError("invalid gd parameters");
  if (!(dcf.p_target > 0.0 && dcf.p_target < 1.0) || !(dcf.c_miss > 0.0) ||
      !(dcf.c_fa > 0.0))
    throw ConfigError("invalid detection cost parameters");
  if (trials < 0) throw ConfigError("trials must be >= 0");
}

Json to_json(const ExperimentConfig& cfg) {
  return Json{{"world", world_to_json(cfg.world)},
              {"rho", cfg.rhos},
              {"methods", cfg.methods},
              {"inverse", std::string(to_string(cfg.inverse))},
              {"train", to_json(cfg.train)},
              {"nes_audio", to_json(cfg.nes_audio)},
              {"nes_latent", to_json(cfg.nes_latent)},
              {"sp",
               {{"delta", cfg.sp.delta},
                {"m", cfg.sp.m},
                {"probe_count", cfg.sp.probe_count},
                {"probe_coherence", cfg.sp.probe_coherence}}},
              {"gd", to_json(cfg.gd)},
              {"metrics",
               {{"p_target", cfg.dcf.p_target},
                {"c_miss", cfg.dcf.c_miss},
                {"c_fa", cfg.dcf.c_fa}}},
              {"query_budget", cfg.query_budget},
              {"trials", cfg.trials},
              {"seed", cfg.seed},
              {"output_dir", cfg.output_dir}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"world", "rho", "methods", "inverse", "train",
                       "nes_audio", "nes_latent", "sp", "gd", "metrics",
                       "query_budget", "trials", "seed", "output_dir"},
                      "config");
  ExperimentConfig c;
  try {
    if (j.contains("world")) c.world = world_from_json(j["world"], c.world);
    if (j.contains("rho")) c.rhos = j["rho"].get<std::vector<double>>();
    if (j.contains("methods"))
      c.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("inverse"))
      c.inverse = inverse_kind_from_string(j["inverse"].get<std::string>());
    if (j.contains("train")) c.train = train_config_from_json(j["train"], c.train);
    if (j.contains("nes_audio"))
      c.nes_audio = nes_config_from_json(j["nes_audio"], c.nes_audio);
    if (j.contains("nes_latent"))
      c.nes_latent = nes_config_from_json(j["nes_latent"], c.nes_latent);
    if (j.contains("sp")) {
      const Json& s = j["sp"];
      reject_unknown_keys(s, {"delta", "m", "probe_count", "probe_coherence"},
                          "sp");
      if (s.contains("delta")) c.sp.delta = s["delta"].get<double>();
      if (s.contains("m")) c.sp.m = s["m"].get<std::size_t>();
      if (s.contains("probe_count"))
        c.sp.probe_count = s["probe_count"].get<std::size_t>();
      if (s.contains("probe_coherence"))
        c.sp.probe_coherence = s["probe_coherence"].get<double>();
    }
    if (j.contains("gd")) c.gd = gd_config_from_json(j["gd"], c.gd);
    if (j.contains("metrics")) {
      const Json& m = j["metrics"];
      reject_unknown_keys(m, {"p_target", "c_miss", "c_fa"}, "metrics");
      if (m.contains("p_target")) c.dcf.p_target = m["p_target"].get<double>();
      if (m.contains("c_miss")) c.dcf.c_miss = m["c_miss"].get<double>();
      if (m.contains("c_fa")) c.dcf.c_fa = m["c_fa"].get<double>();
    }
    if (j.contains("query_budget"))
      c.query_budget = j["query_budget"].get<std::uint64_t>();
    if (j.contains("trials")) c.trials = j["trials"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir"))
      c.output_dir = j["output_dir"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  if (!fs::is_regular_file(path))
    throw ConfigError("config file not found: " + path.string());
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
  Json j = to_json(cfg);
  j.erase("output_dir");
  return content_hash(j);
}

World build_world(const ExperimentConfig& cfg) {
  cfg.validate();
  const WorldConfig& w = cfg.world;
  World world;
  auto local = std::make_shared<const FeatureExtractor>(
      make_extractor(derive_seed(cfg.seed, {kLocalTag}), w.n, w.d, w.kind));
  const std::uint64_t fresh = derive_seed(cfg.seed, {kTargetTag});
  for (double rho : cfg.rhos)
    world.targets.push_back(std::make_shared<const FeatureExtractor>(
        make_correlated_extractor(*local, CorrelationSpec{rho, fresh})));
  world.local = std::move(local);
  world.system = make_population(derive_seed(cfg.seed, {kSystemTag}),
                                 w.identities, w.per_identity,
                                 w.within_spread, w.n);
  world.victims = make_population(derive_seed(cfg.seed, {kVictimTag}),
                                  std::max(cfg.trials, 2), 2, w.within_spread,
                                  w.n);
  world.attacker = make_population(derive_seed(cfg.seed, {kAttackerTag}),
                                   w.identities, w.per_identity,
                                   w.within_spread, w.n);
  return world;
}

ScoreSample population_scores(const FeatureExtractor& extractor,
                              const Population& pop) {
  std::vector<UnitFeature> feats;
  feats.reserve(pop.size());
  for (const Waveform& w : pop.waveforms) feats.push_back(extractor.extract(w));
  ScoreSample s;
  for (std::size_t i = 0; i < feats.size(); ++i)
    for (std::size_t j = i + 1; j < feats.size(); ++j) {
      const double c = cosine(feats[i], feats[j]).value();
      if (pop.identity_labels[i] == pop.identity_labels[j])
        s.genuine.push_back(c);
      else
        s.impostor.push_back(c);
    }
  return s;
}

CalibrationReport calibrate(const ExperimentConfig& cfg, const World& world) {
  CalibrationReport rep;
  rep.params = cfg.dcf;
  for (std::size_t k = 0; k < cfg.rhos.size(); ++k) {
    const ScoreSample s = population_scores(*world.targets[k], world.system);
    OracleCalibration c;
    c.rho = cfg.rhos[k];
    c.genuine_pairs = s.genuine.size();
    c.impostor_pairs = s.impostor.size();
    if (c.genuine_pairs < kMinCalibrationPairs ||
        c.impostor_pairs < kMinCalibrationPairs)
      rep.warnings.push_back("rho " + fmt(c.rho, "%.2f") +
                             ": fewer than 100 genuine or impostor pairs; "
                             "thresholds may be unstable");
    const EerResult e = eer(s);
    const DcfResult m = min_dcf(s, cfg.dcf);
    c.eer = e.eer;
    c.tau_e = e.operating.tau;
    c.min_dcf = m.min_dcf;
    c.tau_m = m.operating.tau;
    rep.oracles.push_back(c);
  }
  return rep;
}

CalibrationReport calibrate(const ExperimentConfig& cfg) {
  return calibrate(cfg, build_world(cfg));
}

Json to_json(const CalibrationReport& report) {
  Json oracles = Json::array();
  for (const auto& c : report.oracles)
    oracles.push_back(Json{{"rho", c.rho},
                           {"eer", c.eer},
                           {"tau_E", c.tau_e},
                           {"min_dcf", c.min_dcf},
                           {"tau_M", c.tau_m},
                           {"genuine_pairs", c.genuine_pairs},
                           {"impostor_pairs", c.impostor_pairs}});
  return Json{{"oracles", oracles},
              {"parameters",
               {{"p_target", report.params.p_target},
                {"c_miss", report.params.c_miss},
                {"c_fa", report.params.c_fa}}},
              {"warnings", report.warnings}};
}

InverseModel attacker_inverse(const ExperimentConfig& cfg, const World& world) {
  if (cfg.inverse == InverseKind::analytic) return analytic_inverse(*world.local);
  const auto split = split_by_identity(world.attacker);
  return train_inverse(*world.local, split.first, cfg.train).model;
}

AttackRun run_attacks(const ExperimentConfig& cfg) {
  cfg.validate();
  const World world = build_world(cfg);
  AttackRun run;
  run.calibration = calibrate(cfg, world);
  if (cfg.trials == 0) return run;
  const std::string hash = config_hash(cfg);

  const auto uses = [&](const char* m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) !=
           cfg.methods.end();
  };
  const bool need_obs = uses(kMethodSp) || uses(kMethodAudioGd);
  std::optional<InverseModel> model;
  if (need_obs || uses(kMethodLatentNes)) model = attacker_inverse(cfg, world);

  // The probe set is fixed before any victim is queried.
  std::optional<OrthogonalSet> obs;
  std::string obs_error;
  if (need_obs) {
    try {
      const auto probes =
          probe_corpus(*model, cfg.sp.probe_count, cfg.sp.probe_coherence,
                       derive_seed(cfg.seed, {kProbeTag}));
      obs = build_delta_obs(probes, *world.local, cfg.sp.delta, cfg.sp.m,
                            derive_seed(cfg.seed, {kObsTag}));
      run.orthogonal_set = orthogonal_set_document(*obs);
    } catch (const std::exception& e) {
      obs_error = e.what();
    }
  }

  const char* thresholds[] = {"tau_E", "tau_M"};
  for (std::size_t r = 0; r < cfg.rhos.size(); ++r) {
    const OracleCalibration& cal = run.calibration.oracles[r];
    const auto& target = world.targets[r];
    for (int v = 0; v < cfg.trials; ++v) {
      const EnrolledTemplate tmpl =
          enroll(*target, world.victims.waveforms[first_utterance_of(world.victims, v)], v);
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const std::string& method = cfg.methods[mi];
        for (std::size_t ti = 0; ti < 2; ++ti) {
          ResultRecord rec;
          rec.scenario = "attack";
          rec.rho = cfg.rhos[r];
          rec.victim = v;
          rec.method = method;
          rec.threshold = thresholds[ti];
          rec.tau = ti == 0 ? cal.tau_e : cal.tau_m;
          rec.config_hash = hash;
          rec.final_score = -1.0;

          VerificationOracle oracle(target, tmpl, cfg.query_budget);
          RandomStream rng(derive_seed(cfg.seed, {kTrialTag, r, static_cast<std::uint64_t>(v), mi, ti}));
          try {
            if (method == kMethodAudioNes || method == kMethodLatentNes) {
              const AttackTrace trace =
                  method == kMethodAudioNes
                      ? audio_nes(oracle, rec.tau, cfg.nes_audio, rng)
                      : latent_nes(oracle, *model, rec.tau, cfg.nes_latent, rng);
              rec.success = trace.success;
              rec.final_score = trace.best_score;
              auto& lines =
                  run.traces[trace_file_name(method, rec.rho, rec.threshold)];
              for (const StepRecord& step : trace.steps) {
                Json j = step_record_json(step);
                j["victim"] = v;
                lines.push_back(j.dump());
              }
            } else {
              if (!obs) throw std::runtime_error(obs_error);
              const SpOutcome sp = sp_attack(oracle, *world.local, *model, *obs);
              Waveform attack = sp.attack;
              if (method == kMethodAudioGd) {
                const Vector start = rng.gaussian_vector(cfg.world.n);
                attack = audio_gd(*world.local, sp.recovery.recovered,
                                  Waveform::clipped(start), cfg.gd)
                             .waveform;
              }
              rec.final_score = score_against(*target, tmpl, attack).value();
              rec.success = rec.final_score >= rec.tau;
            }
          } catch (const std::exception& e) {
            rec.error = e.what();
            rec.success = false;
          }
          rec.queries = oracle.queries();
          run.ledger_total += oracle.queries();
          run.records.push_back(std::move(rec));
        }
      }
    }
  }
  run.summary = summarize_records(run.records);
  return run;
}

std::vector<SummaryRow> summarize_records(
    const std::vector<ResultRecord>& records) {
  std::vector<SummaryRow> rows;
  std::vector<double> query_sums;
  for (const ResultRecord& rec : records) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& r) {
      return r.method == rec.method && r.threshold == rec.threshold &&
             r.rho == rec.rho;
    });
    if (it == rows.end()) {
      SummaryRow row;
      row.method = rec.method;
      row.threshold = rec.threshold;
      row.rho = rec.rho;
      rows.push_back(std::move(row));
      query_sums.push_back(0.0);
      it = rows.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - rows.begin());
    ++it->trials;
    it->total_queries += rec.queries;
    if (rec.success) {
      ++it->successes;
      query_sums[k] += static_cast<double>(rec.queries);
    }
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].asr = static_cast<double>(rows[k].successes) / rows[k].trials;
    if (rows[k].successes > 0)
      rows[k].mean_queries = query_sums[k] / rows[k].successes;
  }
  return rows;
}

std::string results_csv(const std::vector<ResultRecord>& records) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (const ResultRecord& r : records) {
    out += csv_field(r.scenario) + "," + fmt(r.rho, "%.4f") + "," +
           std::to_string(r.victim) + "," + csv_field(r.method) + "," +
           csv_field(r.threshold) + "," + fmt(r.tau, "%.9f") + "," +
           (r.success ? "1" : "0") + "," + std::to_string(r.queries) + "," +
           fmt(r.final_score, "%.9f") + "," + csv_field(r.config_hash) + "," +
           csv_field(r.error) + "\n";
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "method,threshold,rho,trials,successes,asr,mean_queries_success,"
      "total_queries\n";
  for (const SummaryRow& r : rows)
    out += r.method + "," + r.threshold + "," + fmt(r.rho, "%.4f") + "," +
           std::to_string(r.trials) + "," + std::to_string(r.successes) + "," +
           fmt(r.asr, "%.4f") + "," +
           (r.mean_queries ? fmt(*r.mean_queries, "%.1f") : std::string()) +
           "," + std::to_string(r.total_queries) + "\n";
  return out;
}

std::string render_summary(const std::vector<SummaryRow>& rows,
                           const CalibrationReport* calibration) {
  std::string out;
  char line[256];
  if (calibration) {
    out += "Calibration (p_target=" + fmt(calibration->params.p_target, "%g") +
           ", c_miss=" + fmt(calibration->params.c_miss, "%g") +
           ", c_fa=" + fmt(calibration->params.c_fa, "%g") + ")\n";
    std::snprintf(line, sizeof line, "%-6s %-9s %-9s %-9s %-9s\n", "rho",
                  "EER", "tau_E", "minDCF", "tau_M");
    out += line;
    for (const auto& c : calibration->oracles) {
      std::snprintf(line, sizeof line, "%-6.2f %-9.4f %-9.4f %-9.4f %-9.4f\n",
                    c.rho, c.eer, c.tau_e, c.min_dcf, c.tau_m);
      out += line;
    }
    for (const auto& w : calibration->warnings) out += "warning: " + w + "\n";
    out += "\n";
  }
  out += "Attacks (mean queries over successful trials)\n";
  std::snprintf(line, sizeof line, "%-11s %-6s %-6s %-7s %-7s %-12s\n",
                "method", "thresh", "rho", "trials", "ASR", "queries");
  out += line;
  for (const SummaryRow& r : rows) {
    const std::string q = r.mean_queries ? fmt(*r.mean_queries, "%.1f") : "-";
    std::snprintf(line, sizeof line, "%-11s %-6s %-6.2f %-7zu %-7.3f %-12s\n",
                  r.method.c_str(), r.threshold.c_str(), r.rho, r.trials,
                  r.asr, q.c_str());
    out += line;
  }
  return out;
}

TrainingRun run_train_inverse(const ExperimentConfig& cfg, bool ablation) {
  cfg.validate();
  const World world = build_world(cfg);
  const auto [train_pool, held_out] = split_by_identity(world.attacker);
  TrainResult main = train_inverse(*world.local, train_pool, cfg.train);
  TrainingRun run{main.model, main.loss_history, {}};
  if (!ablation) return run;

  struct Variant {
    const char* name;
    double lambda_sc;
  };
  const Variant variants[] = {
      {"L_IC", 0.0},
      {"L_IC+L_SC", cfg.train.lambda_sc > 0.0 ? cfg.train.lambda_sc : 1.0}};
  for (const Variant& var : variants) {
    TrainConfig tc = cfg.train;
    tc.lambda_sc = var.lambda_sc;
    const InverseModel model =
        tc.lambda_sc == cfg.train.lambda_sc
            ? main.model
            : train_inverse(*world.local, train_pool, tc).model;
    for (std::size_t k = 0; k < cfg.rhos.size(); ++k) {
      const RoundTripReport rt =
          round_trip_report(*world.targets[k], *world.local, model, held_out,
                            derive_seed(cfg.seed, {kEvalTag}));
      run.ablation.push_back(AblationRow{var.name, tc.lambda_ic, tc.lambda_sc,
                                         cfg.rhos[k], rt.local.mean,
                                         rt.transfer.mean});
    }
  }
  return run;
}

IdConstraintRun run_id_constraints(const ExperimentConfig& cfg) {
  cfg.validate();
  const World world = build_world(cfg);
  const CalibrationReport cal = calibrate(cfg, world);
  const InverseModel model = attacker_inverse(cfg, world);
  const Population held_out = split_by_identity(world.attacker).second;

  IdConstraintRun run;
  run.inverse = cfg.inverse;
  for (std::size_t k = 0; k < cfg.rhos.size(); ++k) {
    const RoundTripReport rt =
        round_trip_report(*world.targets[k], *world.local, model, held_out,
                          derive_seed(cfg.seed, {kEvalTag}));
    IdConstraintRow row{cfg.rhos[k], rt.local, rt.transfer, rt.positive,
                        rt.negative, cal.oracles[k].tau_e, 0.0};
    row.fraction_accepted = asr(rt.transfer_scores, row.tau_e);
    run.rows.push_back(row);
  }
  run.angular = angular_robustness(*world.local, model, held_out, kAngles,
                                   derive_seed(cfg.seed, {kEvalTag}));
  return run;
}

void write_calibration(const fs::path& dir, const ExperimentConfig& cfg,
                       const CalibrationReport& report) {
  write_common(dir, cfg, "calibrate");
  Json j = to_json(report);
  j["config_hash"] = config_hash(cfg);
  write_text(dir / "calibration.json", j.dump(2) + "\n");
}

void write_attack_outputs(const fs::path& dir, const ExperimentConfig& cfg,
                          const AttackRun& run) {
  write_common(dir, cfg, "attack");
  Json cal = to_json(run.calibration);
  cal["config_hash"] = config_hash(cfg);
  write_text(dir / "calibration.json", cal.dump(2) + "\n");
  write_text(dir / "results.csv", results_csv(run.records));
  write_text(dir / "summary.csv", summary_csv(run.summary));
  write_text(dir / "summary.txt", render_summary(run.summary, &run.calibration));
  if (run.orthogonal_set)
    write_text(dir / "orthogonal_set.json", run.orthogonal_set->dump(2) + "\n");
  fs::create_directories(dir / "traces");
  for (const auto& [name, lines] : run.traces) {
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    write_text(dir / "traces" / name, text);
  }
}

void write_training_outputs(const fs::path& dir, const ExperimentConfig& cfg,
                            const TrainingRun& run) {
  write_common(dir, cfg, "train-inverse");
  const FeatureExtractor local = make_extractor(
      derive_seed(cfg.seed, {kLocalTag}), cfg.world.n, cfg.world.d,
      cfg.world.kind);
  write_text(dir / "inverse_model.json",
             inverse_model_document(run.model, local.descriptor(), &cfg.train)
                     .dump() +
                 "\n");
  std::string hist = "step,loss\n";
  for (std::size_t i = 0; i < run.loss_history.size(); ++i)
    hist += std::to_string(i) + "," + fmt(run.loss_history[i], "%.9g") + "\n";
  write_text(dir / "loss_history.csv", hist);
  if (!run.ablation.empty()) {
    std::string csv = "objective,lambda_ic,lambda_sc,rho,mean_s_L,mean_s_T\n";
    for (const AblationRow& r : run.ablation)
      csv += r.objective + "," + fmt(r.lambda_ic, "%g") + "," +
             fmt(r.lambda_sc, "%g") + "," + fmt(r.rho, "%.4f") + "," +
             fmt(r.local_mean, "%.6f") + "," + fmt(r.transfer_mean, "%.6f") +
             "\n";
    write_text(dir / "ablation.csv", csv);
  }
}

void write_id_constraint_outputs(const fs::path& dir,
                                 const ExperimentConfig& cfg,
                                 const IdConstraintRun& run) {
  write_common(dir, cfg, "id-constraints");
  std::string csv =
      "inverse,rho,s_L_mean,s_L_std,s_T_mean,s_T_std,positive_mean,"
      "negative_mean,tau_E,accepted_fraction\n";
  for (const IdConstraintRow& r : run.rows)
    csv += std::string(to_string(run.inverse)) + "," + fmt(r.rho, "%.4f") +
           "," + fmt(r.local.mean) + "," + fmt(r.local.std) + "," +
           fmt(r.transfer.mean) + "," + fmt(r.transfer.std) + "," +
           fmt(r.positive.mean) + "," + fmt(r.negative.mean) + "," +
           fmt(r.tau_e) + "," + fmt(r.fraction_accepted, "%.4f") + "\n";
  write_text(dir / "id_constraints.csv", csv);
  std::string ang = "angle_degrees,mean,std\n";
  for (const AngularRow& r : run.angular)
    ang += fmt(r.angle_degrees, "%g") + "," + fmt(r.mean, "%.9f") + "," +
           fmt(r.std, "%.9f") + "\n";
  write_text(dir / "angular.csv", ang);
}

namespace {

std::vector<ResultRecord> parse_results(const std::string& text,
                                        std::vector<std::string>& errors) {
  std::vector<ResultRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != kResultsHeader)
        errors.push_back("results.csv line 1: unexpected header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = "results.csv line " + std::to_string(lineno);
    if (f.size() != 11) {
      errors.push_back(where + ": expected 11 fields, found " +
                       std::to_string(f.size()));
      continue;
    }
    try {
      ResultRecord r;
      r.scenario = f[0];
      r.rho = std::stod(f[1]);
      r.victim = std::stoi(f[2]);
      r.method = f[3];
      r.threshold = f[4];
      r.tau = std::stod(f[5]);
      if (f[6] != "0" && f[6] != "1") throw std::invalid_argument("success");
      r.success = f[6] == "1";
      r.queries = std::stoull(f[7]);
      r.final_score = std::stod(f[8]);
      r.config_hash = f[9];
      r.error = f[10];
      if (!is_method(r.method)) throw std::invalid_argument("method");
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      errors.push_back(where + ": malformed field (" + e.what() + ")");
    }
  }
  return out;
}

std::string render_csv_table(const std::string& title, const std::string& csv) {
  std::string out = title + "\n";
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::string row;
    for (const auto& f : split_csv_line(line)) {
      char cell[64];
      std::snprintf(cell, sizeof cell, "%-14s", f.c_str());
      row += cell;
    }
    while (!row.empty() && row.back() == ' ') row.pop_back();
    out += row + "\n";
  }
  return out + "\n";
}

}  // namespace

ReportOutput report(const fs::path& dir) {
  ReportOutput rep;
  if (!fs::is_directory(dir)) {
    rep.errors.push_back("results directory does not exist: " + dir.string());
    return rep;
  }
  const char* result_files[] = {"results.csv", "calibration.json",
                                "ablation.csv", "id_constraints.csv",
                                "angular.csv"};
  bool any = false;
  for (const char* f : result_files) any = any || fs::exists(dir / f);
  if (!any) {
    rep.errors.push_back("no result files in " + dir.string());
    return rep;
  }

  std::string text = "scoreprobe report\n";
  if (fs::exists(dir / "config.json")) {
    try {
      const ExperimentConfig cfg =
          experiment_config_from_json(Json::parse(read_text(dir / "config.json")));
      text += "config_hash: " + config_hash(cfg) + "\n";
      text += "master_seed: " + std::to_string(cfg.seed) + "\n";
      text += "trials: " + std::to_string(cfg.trials) + "\n\n";
    } catch (const std::exception& e) {
      rep.errors.push_back(std::string("config.json: ") + e.what());
    }
  } else {
    rep.errors.push_back("config.json: missing");
  }

  std::optional<CalibrationReport> cal;
  if (fs::exists(dir / "calibration.json")) {
    try {
      const Json j = Json::parse(read_text(dir / "calibration.json"));
      CalibrationReport c;
      c.params.p_target = j.at("parameters").at("p_target").get<double>();
      c.params.c_miss = j.at("parameters").at("c_miss").get<double>();
      c.params.c_fa = j.at("parameters").at("c_fa").get<double>();
      for (const Json& o : j.at("oracles"))
        c.oracles.push_back(OracleCalibration{
            o.at("rho").get<double>(), o.at("eer").get<double>(),
            o.at("tau_E").get<double>(), o.at("min_dcf").get<double>(),
            o.at("tau_M").get<double>(),
            o.at("genuine_pairs").get<std::size_t>(),
            o.at("impostor_pairs").get<std::size_t>()});
      c.warnings = j.at("warnings").get<std::vector<std::string>>();
      cal = std::move(c);
    } catch (const std::exception& e) {
      rep.errors.push_back(std::string("calibration.json: ") + e.what());
    }
  }

  if (fs::exists(dir / "results.csv")) {
    const auto records = parse_results(read_text(dir / "results.csv"), rep.errors);
    const auto rows = summarize_records(records);
    text += render_summary(rows, cal ? &*cal : nullptr) + "\n";
    rep.csv = summary_csv(rows);
  } else if (cal) {
    text += render_summary({}, &*cal) + "\n";
  }
  if (fs::exists(dir / "ablation.csv"))
    text += render_csv_table("Inverse training ablation (held-out identities)",
                             read_text(dir / "ablation.csv"));
  if (fs::exists(dir / "id_constraints.csv"))
    text += render_csv_table("Round-trip identity constraints",
                             read_text(dir / "id_constraints.csv"));
  if (fs::exists(dir / "angular.csv"))
    text += render_csv_table("Angular robustness",
                             read_text(dir / "angular.csv"));
  rep.text = text;
  return rep;
}

}  // namespace scoreprobe
