#pragma once

// JSON experiment documents and report serialization for the command-line
// front end.
//
// A document is one experiment object, or a base object with an
// "experiments" array whose entries are merge-patched over the base.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "devlab/deviations.hpp"
#include "devlab/errors.hpp"
#include "devlab/exact_oracle.hpp"
#include "devlab/montecarlo.hpp"
#include "devlab/random_walk.hpp"

namespace devlab {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct EnumerateConfig {
  std::size_t budget = kDefaultOracleBudget;
  bool operator==(const EnumerateConfig&) const = default;
};

/// Everything one experiment document entry can describe. `calibration`
/// and `enumerate` are read only by the matching subcommands.
struct DocumentEntry {
  ExperimentConfig experiment;
  CalibrationConfig calibration;
  EnumerateConfig enumerate;
  bool operator==(const DocumentEntry&) const = default;
};

namespace config_detail {

inline const std::vector<std::pair<GoalId, const char*>>& goal_names() {
  static const std::vector<std::pair<GoalId, const char*>> v{
      {GoalId::AdjacentOnes, "adjacent_ones"}, {GoalId::RandomWalk, "random_walk"},
      {GoalId::SingleBit, "single_bit"}};
  return v;
}
inline const std::vector<std::pair<BlameId, const char*>>& blame_names() {
  static const std::vector<std::pair<BlameId, const char*>> v{
      {BlameId::AdjacentThreshold, "adjacent_threshold"}, {BlameId::Likelihood, "likelihood"},
      {BlameId::RandomWalk, "random_walk"}};
  return v;
}
inline const std::vector<std::pair<AdjBlameVariant, const char*>>& variant_names() {
  static const std::vector<std::pair<AdjBlameVariant, const char*>> v{
      {AdjBlameVariant::FullHorizon, "full_horizon"}, {AdjBlameVariant::Prefix, "prefix"}};
  return v;
}
inline const std::vector<std::pair<DeviationSpec::Kind, const char*>>& kind_names() {
  using K = DeviationSpec::Kind;
  static const std::vector<std::pair<K, const char*>> v{
      {K::Honest, to_string(K::Honest)},
      {K::AlwaysAction, to_string(K::AlwaysAction)},
      {K::FirstMoveThenHonest, to_string(K::FirstMoveThenHonest)},
      {K::Biased, to_string(K::Biased)},
      {K::PinToBand, to_string(K::PinToBand)},
      {K::DriftUp, to_string(K::DriftUp)},
      {K::ReflectAtOne, to_string(K::ReflectAtOne)}};
  return v;
}

template <class E>
const char* name_of(const std::vector<std::pair<E, const char*>>& table, E e) {
  for (const auto& [k, n] : table) {
    if (k == e) return n;
  }
  return "?";
}

template <class E>
E parse_enum(const std::vector<std::pair<E, const char*>>& table, const Json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError("field '" + field + "' must be a string");
  const auto s = j.get<std::string>();
  std::string known;
  for (const auto& [k, n] : table) {
    if (s == n) return k;
    known += known.empty() ? n : std::string(", ") + n;
  }
  throw ConfigError("field '" + field + "': unknown id '" + s + "' (expected one of: " + known + ")");
}

inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown field '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError("missing required field '" + (where.empty() ? std::string(key) : where + "." + key) + "'");
  }
  return *it;
}

inline std::string path_of(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

template <class T>
T get_number(const Json& j, const std::string& field) {
  if constexpr (std::is_floating_point_v<T>) {
    if (j.is_string()) {
      const auto s = j.get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<T>::infinity();
      if (s == "-inf") return -std::numeric_limits<T>::infinity();
    }
    if (!j.is_number()) throw ConfigError("field '" + field + "' must be a number");
    return j.get<T>();
  } else {
    if (!j.is_number_integer()) throw ConfigError("field '" + field + "' must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (j.is_number_unsigned()) return static_cast<T>(j.get<std::uint64_t>());
      if (j.get<std::int64_t>() < 0) throw ConfigError("field '" + field + "' must be non-negative");
    }
    return static_cast<T>(j.get<std::int64_t>());
  }
}

template <class T>
void read_opt(const Json& j, const char* key, const std::string& where, T& out) {
  const auto it = j.find(key);
  if (it != j.end()) out = get_number<T>(*it, path_of(where, key));
}

inline Json number_json(double x) {
  if (std::isinf(x)) return x > 0 ? Json("inf") : Json("-inf");
  if (std::isnan(x)) return Json(nullptr);
  return Json(x);
}

inline Action parse_action(const Json& j, const std::string& field, const ActionSpace& space,
                           PlayerId player) {
  if (j.is_string()) {
    const auto label = j.get<std::string>();
    if (const auto a = space.find(player, label)) return *a;
    throw ConfigError("field '" + field + "': unknown action label '" + label + "'");
  }
  const auto a = get_number<std::uint64_t>(j, field);
  if (a >= space.alphabet_size(player)) throw ConfigError("field '" + field + "': action out of range");
  return static_cast<Action>(a);
}

inline DeviationSpec parse_deviation(const Json& j, const std::string& where, const ActionSpace& space) {
  check_keys(j, where, {"kind", "player", "action", "p", "lo", "hi"});
  DeviationSpec d;
  d.kind = parse_enum(kind_names(), require(j, "kind", where), path_of(where, "kind"));
  d.player = PlayerId{get_number<std::size_t>(require(j, "player", where), path_of(where, "player"))};
  if (d.player.index >= space.num_players()) throw ConfigError("field '" + path_of(where, "player") + "' out of range");
  using K = DeviationSpec::Kind;
  if (d.kind == K::AlwaysAction || d.kind == K::FirstMoveThenHonest) {
    d.action = parse_action(require(j, "action", where), path_of(where, "action"), space, d.player);
  }
  if (d.kind == K::Biased || d.kind == K::DriftUp) {
    d.p = get_number<double>(require(j, "p", where), path_of(where, "p"));
  }
  if (d.kind == K::PinToBand) {
    d.lo = get_number<std::int64_t>(require(j, "lo", where), path_of(where, "lo"));
    d.hi = get_number<std::int64_t>(require(j, "hi", where), path_of(where, "hi"));
  }
  try {
    d.validate();
  } catch (const InputError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return d;
}

inline std::vector<DeviationSpec> parse_deviations(const Json& j, const std::string& where,
                                                   const ActionSpace& space) {
  if (!j.is_array()) throw ConfigError("field '" + where + "' must be an array");
  std::vector<DeviationSpec> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(parse_deviation(j[k], where + "[" + std::to_string(k) + "]", space));
  }
  return out;
}

inline ActionSpace space_of(GoalId id) {
  switch (id) {
    case GoalId::AdjacentOnes: return adj_action_space();
    case GoalId::RandomWalk: return rw_action_space();
    case GoalId::SingleBit: return ActionSpace({{"0", "1"}, {"0", "1"}});
  }
  throw ConfigError("unknown goal");
}

}  // namespace config_detail

inline SurrogateThresholds parse_thresholds(const Json& j, const std::string& where) {
  using namespace config_detail;
  check_keys(j, where, {"theta1", "theta2", "theta3", "n0"});
  SurrogateThresholds th;
  th.theta1 = get_number<double>(require(j, "theta1", where), path_of(where, "theta1"));
  th.theta2 = get_number<double>(require(j, "theta2", where), path_of(where, "theta2"));
  th.theta3 = get_number<double>(require(j, "theta3", where), path_of(where, "theta3"));
  read_opt(j, "n0", where, th.n0);
  try {
    th.validate();
  } catch (const InputError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return th;
}

inline Json thresholds_to_json(const SurrogateThresholds& th) {
  using config_detail::number_json;
  Json j;
  j["theta1"] = number_json(th.theta1);
  j["theta2"] = number_json(th.theta2);
  j["theta3"] = number_json(th.theta3);
  j["n0"] = th.n0;
  return j;
}

/// The fragment written by `calibrate`: a partial document that a
/// `simulate` document can reference via blame.thresholds_file.
inline Json thresholds_fragment(const SurrogateThresholds& th) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["thresholds"] = thresholds_to_json(th);
  return j;
}

inline SurrogateThresholds parse_thresholds_fragment(const Json& j) {
  config_detail::check_keys(j, "", {"schema_version", "thresholds"});
  const auto& v = config_detail::require(j, "schema_version", "");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    throw ConfigError("thresholds fragment: unsupported schema_version");
  }
  return parse_thresholds(config_detail::require(j, "thresholds", ""), "thresholds");
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

/// Parses one experiment object. Relative thresholds_file paths resolve
/// against `base_dir`.
inline DocumentEntry parse_entry(const Json& j, const std::filesystem::path& base_dir = {}) {
  using namespace config_detail;
  check_keys(j, "", {"schema_version", "name", "goal", "deviations", "blame", "horizon", "trials", "seed",
                     "confidence", "conditioned", "threads", "calibration", "enumerate"});
  if (const auto it = j.find("schema_version"); it != j.end()) {
    if (!it->is_number_integer() || it->get<int>() != kSchemaVersion) {
      throw ConfigError("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    }
  }
  DocumentEntry doc;
  auto& e = doc.experiment;
  if (const auto it = j.find("name"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("field 'name' must be a string");
    e.name = it->get<std::string>();
  }

  const auto& g = require(j, "goal", "");
  check_keys(g, "goal", {"id", "mu", "start"});
  e.goal.id = parse_enum(goal_names(), require(g, "id", "goal"), "goal.id");
  read_opt(g, "mu", "goal", e.goal.mu);
  read_opt(g, "start", "goal", e.goal.start);
  const ActionSpace space = space_of(e.goal.id);

  if (const auto it = j.find("deviations"); it != j.end()) e.deviations = parse_deviations(*it, "deviations", space);

  if (const auto it = j.find("blame"); it != j.end()) {
    const auto& b = *it;
    check_keys(b, "blame", {"id", "variant", "hypothesis", "thresholds", "thresholds_file"});
    e.blame.id = parse_enum(blame_names(), require(b, "id", "blame"), "blame.id");
    if (const auto v = b.find("variant"); v != b.end()) {
      e.blame.variant = parse_enum(variant_names(), *v, "blame.variant");
    }
    if (const auto h = b.find("hypothesis"); h != b.end()) {
      e.blame.hypothesis = parse_deviations(*h, "blame.hypothesis", space);
    }
    const auto t = b.find("thresholds");
    const auto tf = b.find("thresholds_file");
    if (t != b.end() && tf != b.end()) {
      throw ConfigError("blame: give either 'thresholds' or 'thresholds_file', not both");
    }
    if (t != b.end()) e.blame.thresholds = parse_thresholds(*t, "blame.thresholds");
    if (tf != b.end()) {
      if (!tf->is_string()) throw ConfigError("field 'blame.thresholds_file' must be a string");
      std::filesystem::path p = tf->get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      e.blame.thresholds = parse_thresholds_fragment(read_json_file(p));
    }
    if (e.blame.id == BlameId::RandomWalk && t == b.end() && tf == b.end()) {
      throw ConfigError("missing required field 'blame.thresholds' (or 'blame.thresholds_file')");
    }
  } else {
    e.blame.id = e.goal.id == GoalId::RandomWalk ? BlameId::RandomWalk
                 : e.goal.id == GoalId::AdjacentOnes ? BlameId::AdjacentThreshold
                                                     : BlameId::Likelihood;
  }

  e.horizon = get_number<std::size_t>(require(j, "horizon", ""), "horizon");
  read_opt(j, "trials", "", e.trials);
  read_opt(j, "seed", "", e.seed);
  read_opt(j, "confidence", "", e.confidence);
  read_opt(j, "conditioned", "", e.conditioned);
  read_opt(j, "threads", "", e.threads);

  auto& c = doc.calibration;
  c.start = e.goal.start;
  c.horizon = e.horizon;
  c.seed = e.seed;
  c.trials = e.trials;
  c.threads = e.threads;
  if (const auto it = j.find("calibration"); it != j.end()) {
    check_keys(*it, "calibration", {"alpha", "trials", "max_conditioned", "n0"});
    read_opt(*it, "alpha", "calibration", c.alpha);
    read_opt(*it, "trials", "calibration", c.trials);
    read_opt(*it, "max_conditioned", "calibration", c.max_conditioned);
    read_opt(*it, "n0", "calibration", c.n0);
  }
  if (const auto it = j.find("enumerate"); it != j.end()) {
    check_keys(*it, "enumerate", {"budget"});
    read_opt(*it, "budget", "enumerate", doc.enumerate.budget);
  }
  return doc;
}

inline Json entry_to_json(const DocumentEntry& doc) {
  using namespace config_detail;
  const auto& e = doc.experiment;
  const ActionSpace space = space_of(e.goal.id);
  const auto dev_json = [&](const DeviationSpec& d) {
    Json o;
    o["kind"] = name_of(kind_names(), d.kind);
    o["player"] = d.player.index;
    using K = DeviationSpec::Kind;
    if (d.kind == K::AlwaysAction || d.kind == K::FirstMoveThenHonest) o["action"] = d.action;
    if (d.kind == K::Biased || d.kind == K::DriftUp) o["p"] = d.p;
    if (d.kind == K::PinToBand) {
      o["lo"] = d.lo;
      o["hi"] = d.hi;
    }
    return o;
  };
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = e.name;
  Json g;
  g["id"] = name_of(goal_names(), e.goal.id);
  if (e.goal.id == GoalId::RandomWalk) {
    g["start"] = e.goal.start;
  } else {
    g["mu"] = e.goal.mu;
  }
  j["goal"] = g;
  j["deviations"] = Json::array();
  for (const auto& d : e.deviations) j["deviations"].push_back(dev_json(d));
  Json b;
  b["id"] = name_of(blame_names(), e.blame.id);
  if (e.blame.id == BlameId::AdjacentThreshold) b["variant"] = name_of(variant_names(), e.blame.variant);
  if (e.blame.id == BlameId::Likelihood) {
    b["hypothesis"] = Json::array();
    for (const auto& d : e.blame.hypothesis) b["hypothesis"].push_back(dev_json(d));
  }
  if (e.blame.id == BlameId::RandomWalk) b["thresholds"] = thresholds_to_json(e.blame.thresholds);
  j["blame"] = b;
  j["horizon"] = e.horizon;
  j["trials"] = e.trials;
  j["seed"] = e.seed;
  j["confidence"] = e.confidence;
  j["conditioned"] = e.conditioned;
  j["threads"] = e.threads;
  Json c;
  c["alpha"] = doc.calibration.alpha;
  c["trials"] = doc.calibration.trials;
  c["max_conditioned"] = doc.calibration.max_conditioned;
  c["n0"] = doc.calibration.n0;
  j["calibration"] = c;
  j["enumerate"] = Json{{"budget", doc.enumerate.budget}};
  return j;
}

/// Expands a document into its entries.
inline std::vector<DocumentEntry> parse_document(const Json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ConfigError("config document must be a JSON object");
  const auto it = j.find("experiments");
  if (it == j.end()) return {parse_entry(j, base_dir)};
  if (!it->is_array() || it->empty()) throw ConfigError("field 'experiments' must be a non-empty array");
  Json base = j;
  base.erase("experiments");
  std::vector<DocumentEntry> out;
  for (std::size_t k = 0; k < it->size(); ++k) {
    Json merged = base;
    merged.merge_patch((*it)[k]);
    try {
      out.push_back(parse_entry(merged, base_dir));
    } catch (const ConfigError& e) {
      throw ConfigError("experiments[" + std::to_string(k) + "]: " + e.what());
    }
  }
  return out;
}

inline std::vector<DocumentEntry> load_document(const std::filesystem::path& path) {
  return parse_document(read_json_file(path), path.parent_path());
}

// ---------------------------------------------------------------- outputs

namespace config_detail {

inline Json estimate_json(const Estimate& e) {
  return Json{{"count", e.count}, {"n", e.out_of}, {"p", e.p}, {"lo", e.ci.lo}, {"hi", e.ci.hi}};
}

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace config_detail

/// One JSONL row per report. Wall-clock runtime is deliberately absent so
/// rows are reproducible byte for byte.
inline Json report_to_json(const EstimateReport& r) {
  using namespace config_detail;
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "estimate";
  j["name"] = r.config.name;
  j["config"] = entry_to_json(DocumentEntry{r.config, {}, {}});
  j["config"].erase("calibration");
  j["config"].erase("enumerate");
  j["config"].erase("threads");
  j["trials"] = r.trials;
  j["reached"] = r.reached;
  j["missed"] = r.missed;
  j["blamed"] = r.blamed;
  j["p_miss"] = estimate_json(r.p_miss);
  j["p_miss_and_blame"] = Json::array();
  for (const auto& e : r.p_miss_and_blame) j["p_miss_and_blame"].push_back(estimate_json(e));
  j["p_blame_given_miss"] = Json::array();
  for (const auto& e : r.p_blame_given_miss) j["p_blame_given_miss"].push_back(estimate_json(e));
  if (r.config.blame.id == BlameId::RandomWalk) {
    j["decided_at_step"] = Json::array({r.decided_at_step[1], r.decided_at_step[2], r.decided_at_step[3],
                                        r.decided_at_step[4]});
  }
  return j;
}

/// Fixed aggregate CSV columns. Games in this library have two players.
inline const char* csv_header() {
  return "name,goal,blame,horizon,seed,confidence,trials,reached,missed,blamed_0,blamed_1,"
         "p_miss,p_miss_lo,p_miss_hi,"
         "p_miss_blame_0,p_miss_blame_0_lo,p_miss_blame_0_hi,"
         "p_miss_blame_1,p_miss_blame_1_lo,p_miss_blame_1_hi,"
         "p_blame_0_given_miss,p_blame_1_given_miss,"
         "decided_step1,decided_step2,decided_step3,decided_step4";
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string report_to_csv_row(const EstimateReport& r) {
  using namespace config_detail;
  std::ostringstream o;
  const auto blamed = [&](std::size_t j) { return j < r.blamed.size() ? r.blamed[j] : 0; };
  const auto est = [&](const std::vector<Estimate>& v, std::size_t j) { return j < v.size() ? v[j] : Estimate{}; };
  o << csv_escape(r.config.name) << ',' << name_of(goal_names(), r.config.goal.id) << ','
    << name_of(blame_names(), r.config.blame.id) << ',' << r.config.horizon << ',' << r.config.seed << ','
    << fmt_double(r.config.confidence) << ',' << r.trials << ',' << r.reached << ',' << r.missed << ','
    << blamed(0) << ',' << blamed(1) << ',' << fmt_double(r.p_miss.p) << ',' << fmt_double(r.p_miss.ci.lo) << ','
    << fmt_double(r.p_miss.ci.hi);
  for (std::size_t j = 0; j < 2; ++j) {
    const auto e = est(r.p_miss_and_blame, j);
    o << ',' << fmt_double(e.p) << ',' << fmt_double(e.ci.lo) << ',' << fmt_double(e.ci.hi);
  }
  o << ',' << fmt_double(est(r.p_blame_given_miss, 0).p) << ',' << fmt_double(est(r.p_blame_given_miss, 1).p);
  for (std::size_t s = 1; s <= 4; ++s) o << ',' << r.decided_at_step[s];
  return o.str();
}

inline Json bounds_report_to_json(const std::string& name, const BlameBoundsReport& r) {
  using config_detail::number_json;
  const auto matrix = [](const std::vector<std::vector<double>>& m) {
    Json a = Json::array();
    for (const auto& row : m) {
      Json jr = Json::array();
      for (double x : row) jr.push_back(number_json(x));
      a.push_back(jr);
    }
    return a;
  };
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "blame_bounds";
  j["name"] = name;
  j["num_players"] = r.num_players;
  j["horizon"] = r.horizon;
  j["rejection_set_size"] = r.rejection_set_size;
  j["rejection_set_prefix_free"] = r.rejection_set_prefix_free;
  j["p_target"] = r.p_star_target;
  j["p_miss"] = r.p_star_miss;
  j["p_blame"] = r.p_star_blame;
  j["p_dev_miss"] = r.p_dev_miss;
  j["p_dev_blame"] = matrix(r.p_dev_blame);
  j["second_moment"] = matrix(r.second_moment);
  j["cross_moment"] = matrix(r.cross_moment);
  j["p_pair_blame"] = matrix(r.p_pair_blame);
  j["max_factorization_error"] = r.max_factorization_error;
  j["all_infinite_verdicts"] = r.all_infinite_verdicts;
  j["squared_bound_holds"] = r.squared_bound_holds;
  j["chain_holds"] = r.chain_holds;
  j["innocent_bound_holds"] = r.innocent_bound_holds;
  j["testability_identity_holds"] = r.testability_identity_holds;
  j["all_hold"] = r.all_hold();
  j["violations"] = r.violations;
  return j;
}

}  // namespace devlab
