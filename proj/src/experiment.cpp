#include "sde/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "sde/csv.hpp"
#include "sde/errors.hpp"
#include "sde/euler_solver.hpp"
#include "sde/gronwall_lab.hpp"
#include "sde/hypothesis_checker.hpp"
#include "sde/martingale_noise.hpp"
#include "sde/models.hpp"
#include "sde/parallel.hpp"

namespace sde {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kKinds{"simulate", "convergence", "verify-gronwall",
                                      "lenglart", "counterexample", "check-conditions"};

const std::map<std::string, std::vector<std::string>> kModelKeys{
    {"gbm", {"mu", "sigma", "x0", "delay"}},
    {"jump_gbm", {"mu", "sigma", "x0", "delay", "jump_scale"}},
    {"linear", {"rate", "sigma", "x0"}},
    {"delay_linear", {"rate", "sigma", "x0", "delay"}},
    {"superlinear", {"x0"}},
    {"zero", {"x0", "delay"}},
};

// Greek spellings are accepted as aliases.
const std::map<std::string, std::string> kAliases{{"α", "alpha"}, {"ε", "epsilon"}};

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::string display_key(const std::string& key) {
  for (const auto& [greek, latin] : kAliases) {
    if (latin == key) return "\"" + key + "\" (" + greek + ")";
  }
  return "\"" + key + "\"";
}

class Parser {
 public:
  std::vector<std::string> errors;

  void error(std::string msg) { errors.push_back(std::move(msg)); }

  // Reports keys outside `allowed`, with the nearest allowed key when close.
  void strict(const json& obj, const std::string& where, const std::vector<std::string>& allowed) {
    for (const auto& item : obj.items()) {
      const std::string& key = item.key();
      if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
      if (where.empty() && kAliases.count(key)) continue;
      std::string best;
      std::size_t best_d = 3;
      for (const auto& cand : allowed) {
        const std::size_t d = edit_distance(key, cand);
        if (d < best_d) {
          best_d = d;
          best = cand;
        }
      }
      std::string msg = "unknown key \"" + where + key + "\"";
      if (!best.empty()) msg += " (did you mean " + display_key(best) + "?)";
      error(msg);
    }
  }

  std::optional<double> number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      error(where + key + " must be a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<std::uint64_t> count(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    error(where + key + " must be a non-negative integer");
    return std::nullopt;
  }

  std::optional<std::string> string(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      error(where + key + " must be a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  template <class T, class One>
  std::optional<std::vector<T>> list(const json& obj, const std::string& key, const std::string& where, One one) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    std::vector<T> out;
    auto take = [&](const json& item) {
      json wrapper{{key, item}};
      if (auto x = (this->*one)(wrapper, key, where)) out.push_back(static_cast<T>(*x));
    };
    if (v.is_array()) {
      if (v.empty()) error(where + key + " must not be empty");
      for (const auto& item : v) take(item);
    } else {
      take(v);
    }
    return out;
  }
};

std::optional<double> in_unit(Parser& ps, std::optional<double> v, const std::string& name) {
  if (v && !(*v > 0.0 && *v < 1.0)) {
    ps.error(name + " must lie in (0,1)");
    return std::nullopt;
  }
  return v;
}

void parse_model(Parser& ps, const json& v, ModelConfig& m) {
  if (v.is_string()) {
    m.name = v.get<std::string>();
    if (!kModelKeys.count(m.name)) ps.error("unknown model \"" + m.name + "\"");
    return;
  }
  if (!v.is_object()) {
    ps.error("model must be a name or an object");
    return;
  }
  const auto name = ps.string(v, "name", "model.");
  if (!name) {
    ps.error("missing required field model.name");
    return;
  }
  m.name = *name;
  const auto it = kModelKeys.find(m.name);
  if (it == kModelKeys.end()) {
    ps.error("unknown model \"" + m.name + "\"");
    return;
  }
  std::vector<std::string> allowed = it->second;
  allowed.push_back("name");
  ps.strict(v, "model.", allowed);
  if (auto x = ps.number(v, "mu", "model.")) m.mu = *x;
  if (auto x = ps.number(v, "sigma", "model.")) m.sigma = *x;
  if (auto x = ps.number(v, "x0", "model.")) m.x0 = *x;
  if (auto x = ps.number(v, "rate", "model.")) m.rate = *x;
  if (auto x = ps.number(v, "jump_scale", "model.")) m.jump_scale = *x;
  if (auto x = ps.number(v, "delay", "model.")) {
    if (*x > 0.0) m.delay = *x;
    else ps.error("model.delay must be positive");
  }
}

void parse_noise(Parser& ps, const json& v, NoiseConfig& n) {
  if (!v.is_object()) {
    ps.error("noise must be an object");
    return;
  }
  ps.strict(v, "noise.", {"wiener", "jump_rate", "marks"});
  if (auto x = ps.count(v, "wiener", "noise.")) n.wiener = *x;
  if (auto x = ps.number(v, "jump_rate", "noise.")) {
    if (*x >= 0.0) n.jump_rate = *x;
    else ps.error("noise.jump_rate must be non-negative");
  }
  if (v.contains("marks")) {
    const json& m = v.at("marks");
    if (!m.is_object()) {
      ps.error("noise.marks must be an object");
      return;
    }
    ps.strict(m, "noise.marks.", {"weights", "lower", "upper"});
    if (auto w = ps.list<double>(m, "weights", "noise.marks.", &Parser::number)) n.weights = *w;
    if (auto w = ps.list<double>(m, "lower", "noise.marks.", &Parser::number)) n.lower = *w;
    if (auto w = ps.list<double>(m, "upper", "noise.marks.", &Parser::number)) n.upper = *w;
    if (!n.weights.empty() && (!n.lower.empty() || !n.upper.empty()))
      ps.error("noise.marks takes either weights or lower/upper, not both");
    if (n.lower.size() != n.upper.size()) ps.error("noise.marks.lower and noise.marks.upper differ in length");
  }
}

void require(Parser& ps, const json& doc, const std::string& kind, const std::vector<std::string>& keys) {
  for (const auto& key : keys) {
    bool present = doc.contains(key);
    for (const auto& [greek, latin] : kAliases) {
      if (latin == key && doc.contains(greek)) present = true;
    }
    if (!present) ps.error("missing required field \"" + key + "\" for kind " + kind);
  }
}

json config_echo(const ExperimentConfig& c) {
  json j{{"kind", c.kind}, {"seed", c.seed}};
  j["model"] = {{"name", c.model.name}, {"mu", c.model.mu},     {"sigma", c.model.sigma},
                {"x0", c.model.x0},     {"delay", c.model.delay}, {"rate", c.model.rate},
                {"jump_scale", c.model.jump_scale}};
  j["noise"] = {{"wiener", c.noise.wiener}, {"jump_rate", c.noise.jump_rate}, {"weights", c.noise.weights},
                {"lower", c.noise.lower},   {"upper", c.noise.upper}};
  j["grid"] = {{"n", c.n}, {"T", c.horizon}};
  j["replications"] = c.replications;
  if (!c.ns.empty()) j["ns"] = c.ns;
  if (!c.p.empty()) j["p"] = c.p;
  if (!c.q.empty()) j["q"] = c.q;
  j["alpha"] = c.alpha;
  if (c.epsilon) j["epsilon"] = *c.epsilon;
  return j;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

MartingaleMeasureSpec make_spec(const NoiseConfig& n) {
  if (n.jump_rate <= 0.0) return MartingaleMeasureSpec::wiener(n.wiener);
  MarkSpace marks = FiniteMarks{{1.0}};
  if (!n.weights.empty()) marks = FiniteMarks{n.weights};
  if (!n.lower.empty()) marks = RectangleMarks{n.lower, n.upper};
  return MartingaleMeasureSpec::poisson(n.wiener, n.jump_rate, marks);
}

BuiltinModel make_model(const ExperimentConfig& c) {
  const ModelConfig& m = c.model;
  const GbmParams gbm{m.mu, m.sigma, m.x0};
  if (m.name == "gbm") return gbm_model(gbm, m.delay);
  if (m.name == "jump_gbm") return jump_gbm_model(gbm, m.jump_scale, c.noise.jump_rate, m.delay);
  if (m.name == "linear") return linear_model(m.rate, m.sigma, m.x0, c.noise.wiener, c.noise.jump_rate);
  if (m.name == "delay_linear") return delay_linear_model(m.rate, m.delay, m.sigma, m.x0);
  if (m.name == "superlinear") return superlinear_model(m.x0);
  if (m.name == "zero") return zero_model(m.x0, m.delay);
  throw ArgumentError("unknown model \"" + m.name + "\"");
}

class Artifacts {
 public:
  explicit Artifacts(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  std::vector<std::filesystem::path> flush() const {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    for (const auto& [name, content] : files_) {
      const auto path = dir_ / name;
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out << content;
      out.close();
      if (!out) throw std::runtime_error("cannot write " + path.string());
      written.push_back(path);
    }
    return written;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string fmt(double v) { return format_double(v); }

struct Outcome {
  json results;
  bool violated = false;
  std::string verdict;
};

Outcome run_simulate(const ExperimentConfig& c, std::size_t threads, Artifacts& art) {
  const BuiltinModel bm = make_model(c);
  const MartingaleMeasureSpec spec = make_spec(c.noise);
  std::vector<CadlagPath> paths(c.replications);
  parallel_for(c.replications, threads, [&](std::size_t r) {
    SolveOptions opts;
    opts.replication = r;
    paths[r] = euler_solve(bm.model, spec, c.n, c.horizon, {c.seed, r}, opts);
  });
  std::ostringstream csv;
  const std::size_t d = bm.model.dimension;
  csv << "replication,t";
  for (std::size_t k = 1; k <= d; ++k) csv << ",x_" << k;
  csv << '\n';
  std::vector<double> terminal;
  for (std::size_t r = 0; r < paths.size(); ++r) {
    const auto& p = paths[r];
    for (std::size_t i = 0; i < p.segment_count(); ++i) {
      csv << r << ',' << fmt(p.breakpoints()[i]);
      for (double v : p.segment_value(i)) csv << ',' << fmt(v);
      csv << '\n';
    }
    terminal.push_back(p.value_at(c.horizon)[0]);
  }
  art.add("paths.csv", csv.str());
  Outcome out;
  out.verdict = "success";
  out.results = {{"model", bm.name}, {"replications", c.replications}, {"n", c.n}, {"T", c.horizon}};
  if (!terminal.empty()) {
    const MeanEstimate m = estimate_mean(terminal);
    out.results["terminal_mean"] = m.mean;
    out.results["terminal_std_error"] = m.std_error;
  }
  return out;
}

Outcome run_convergence(const ExperimentConfig& c, std::size_t threads, Artifacts& art) {
  const BuiltinModel bm = make_model(c);
  const MartingaleMeasureSpec spec = make_spec(c.noise);
  TerminalOracle oracle;
  if (c.model.name == "gbm") {
    const GbmParams params{c.model.mu, c.model.sigma, c.model.x0};
    oracle = [params](const NoiseRealization& noise) { return gbm_exact_terminal(params, noise); };
  }
  const StrongErrorStudy study = strong_error_study(bm.model, spec, c.ns, c.horizon, c.replications, c.seed, oracle, threads);
  std::ostringstream csv;
  csv << "n,error,std_error\n";
  json points = json::array();
  for (const auto& pt : study.points) {
    csv << pt.n << ',' << fmt(pt.error.mean) << ',' << fmt(pt.error.std_error) << '\n';
    points.push_back({{"n", pt.n}, {"error", pt.error.mean}, {"std_error", pt.error.std_error}});
  }
  art.add("convergence.csv", csv.str());
  Outcome out;
  out.verdict = "success";
  out.results = {{"model", bm.name},
                 {"reference", oracle ? "exact" : "finest"},
                 {"points", points},
                 {"slope", study.fit.slope},
                 {"slope_std_error", study.fit.slope_std_error},
                 {"intercept", study.fit.intercept}};
  if (c.epsilon) {
    std::ostringstream gap;
    gap << "n,m,epsilon,p,lower,upper\n";
    json rows = json::array();
    for (std::size_t n : c.ns) {
      const ProportionEstimate e =
          resolution_gap(bm.model, spec, n, 2 * n, c.horizon, *c.epsilon, c.replications, c.seed, threads);
      gap << n << ',' << 2 * n << ',' << fmt(*c.epsilon) << ',' << fmt(e.p) << ',' << fmt(e.ci.lower) << ','
          << fmt(e.ci.upper) << '\n';
      rows.push_back({{"n", n}, {"m", 2 * n}, {"p", e.p}, {"ci", {e.ci.lower, e.ci.upper}}});
    }
    art.add("gap.csv", gap.str());
    out.results["resolution_gap"] = rows;
  }
  return out;
}

Outcome run_gronwall(const ExperimentConfig& c, std::size_t threads, Artifacts& art) {
  GronwallEnsemble ens;
  if (c.ensemble == "gbm") {
    ens = gbm_gronwall_ensemble({c.model.mu, c.model.sigma, c.model.x0}, c.n, c.horizon, c.replications, c.seed, threads);
  } else {
    ens = counterexample_ensemble(c.q.front(), c.alpha, c.replications, c.seed);
  }
  std::ostringstream csv;
  csv << "variant,p,lhs,lhs_std_error,lhs_upper,h_stat,A_T,rhs,verdict\n";
  Outcome out;
  json reports = json::array();
  for (const auto& tag : c.variants) {
    for (double p : c.p) {
      const VerificationReport rep = verify_gronwall(ens, parse_variant(tag), p, {c.enforce_preconditions});
      csv << tag << ',' << fmt(p) << ',' << fmt(rep.lhs.mean) << ',' << fmt(rep.lhs.std_error) << ','
          << fmt(rep.lhs_ci.upper) << ',' << fmt(rep.h_stat) << ',' << fmt(rep.a_T) << ',' << fmt(rep.rhs) << ','
          << (rep.holds ? "holds" : "violated") << '\n';
      reports.push_back(rep.to_json());
      if (!rep.holds) out.violated = true;
    }
  }
  art.add("gronwall.csv", csv.str());
  out.results = {{"ensemble", c.ensemble}, {"reports", reports}};
  out.verdict = out.violated ? "violated" : "holds";
  return out;
}

Outcome run_lenglart(const ExperimentConfig& c, std::size_t threads, Artifacts& art) {
  PairGenerator gen;
  if (c.generator == "brownian_square") gen = brownian_square_pair(c.steps);
  else if (c.generator == "poisson") gen = poisson_count_pair(c.generator_rate, c.horizon);
  else gen = exponential_martingale_pair(c.generator_sigma, c.steps, c.horizon);
  const SupSamples sups = sample_sups(gen, c.replications, c.seed, threads);
  std::ostringstream csv;
  csv << "p,lhs,lhs_std_error,lhs_upper,rhs,verdict\n";
  Outcome out;
  json moments = json::array();
  for (double p : c.p) {
    const MomentReport m = lenglart_moment(sups, p);
    csv << fmt(p) << ',' << fmt(m.lhs.mean) << ',' << fmt(m.lhs.std_error) << ',' << fmt(m.lhs_upper) << ','
        << fmt(m.rhs) << ',' << (m.holds ? "holds" : "violated") << '\n';
    moments.push_back({{"p", p}, {"lhs", m.lhs.mean}, {"lhs_std_error", m.lhs.std_error},
                       {"lhs_upper", m.lhs_upper}, {"rhs", m.rhs}, {"verdict", m.holds ? "holds" : "violated"}});
    if (!m.holds) out.violated = true;
  }
  art.add("lenglart.csv", csv.str());
  out.results = {{"generator", c.generator}, {"moments", moments}};
  if (c.tail_c && c.tail_d) {
    const TailReport t = lenglart_tail(sups, *c.tail_c, *c.tail_d);
    out.results["tail"] = {{"c", t.c},
                           {"d", t.d},
                           {"lhs", t.lhs.p},
                           {"lhs_ci", {t.lhs.ci.lower, t.lhs.ci.upper}},
                           {"rhs", t.rhs},
                           {"rhs_upper", t.rhs_upper},
                           {"verdict", t.holds ? "holds" : "violated"}};
    if (!t.holds) out.violated = true;
  }
  out.verdict = out.violated ? "violated" : "holds";
  return out;
}

Outcome run_counterexample(const ExperimentConfig& c, Artifacts& art) {
  std::ostringstream csv;
  csv << "q,alpha,p,lhs_exact,lhs_mc,lhs_std_error,h_moment_mc,h_moment_std_error,mean_mc,mean_std_error\n";
  json rows = json::array();
  for (double q : c.q) {
    for (double p : c.p) {
      const CounterexampleStats s = counterexample_stats(q, c.alpha, p, c.replications, c.seed);
      csv << fmt(q) << ',' << fmt(c.alpha) << ',' << fmt(p) << ',' << fmt(s.lhs_exact) << ',' << fmt(s.lhs_mc.mean)
          << ',' << fmt(s.lhs_mc.std_error) << ',' << fmt(s.h_moment_mc.mean) << ',' << fmt(s.h_moment_mc.std_error)
          << ',' << fmt(s.mean_mc.mean) << ',' << fmt(s.mean_mc.std_error) << '\n';
      rows.push_back({{"q", q}, {"p", p}, {"lhs_exact", s.lhs_exact}, {"lhs_mc", s.lhs_mc.mean}});
    }
  }
  art.add("counterexample.csv", csv.str());
  Outcome out;
  out.verdict = "success";
  out.results = {{"alpha", c.alpha}, {"rows", rows}};
  return out;
}

Outcome run_conditions(const ExperimentConfig& c, std::size_t threads, Artifacts& art) {
  const BuiltinModel bm = make_model(c);
  const MartingaleMeasureSpec spec = make_spec(c.noise);
  PathSampler sampler;
  sampler.radius = c.sampler_radius.value_or(c.radius);
  sampler.horizon = c.horizon;
  Outcome out;
  json reports = json::array();
  for (const auto& tag : c.conditions) {
    const ConditionReport rep =
        check_condition(bm.model, bm.rates, spec, parse_condition(tag), c.radius, sampler, c.samples, c.seed, threads);
    reports.push_back(rep.to_json());
    if (!rep.violations.empty()) {
      out.violated = true;
      std::ostringstream csv;
      write_witnesses_csv(csv, rep);
      art.add("witnesses_" + tag + ".csv", csv.str());
    }
  }
  out.results = {{"model", bm.name}, {"reports", reports}};
  out.verdict = out.violated ? "violated" : "holds";
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed configuration: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"configuration must be a JSON object"});

  Parser ps;
  ExperimentConfig c;
  ps.strict(doc, "", {"kind", "model", "noise", "grid", "ns", "replications", "p", "q", "alpha", "epsilon",
                      "variant", "ensemble", "enforce_preconditions", "conditions", "radius", "sampler_radius",
                      "samples", "generator", "c", "d", "seed", "threads", "output"});
  for (const auto& [greek, latin] : kAliases) {
    if (doc.contains(greek)) {
      if (doc.contains(latin)) ps.error("both \"" + latin + "\" and \"" + greek + "\" given");
      else doc[latin] = doc[greek];
    }
  }

  const auto kind = ps.string(doc, "kind", "");
  if (!kind) {
    if (!doc.contains("kind")) ps.error("missing required field \"kind\"");
  } else if (std::find(kKinds.begin(), kKinds.end(), *kind) == kKinds.end()) {
    ps.error("unknown kind \"" + *kind + "\"");
  } else {
    c.kind = *kind;
    static const std::map<std::string, std::vector<std::string>> required{
        {"simulate", {"model", "grid", "replications"}},
        {"convergence", {"model", "ns", "replications"}},
        {"verify-gronwall", {"grid", "replications", "p"}},
        {"lenglart", {"replications", "p"}},
        {"counterexample", {"q", "alpha", "p", "replications"}},
        {"check-conditions", {"model", "conditions", "radius", "samples"}},
    };
    require(ps, doc, c.kind, required.at(c.kind));
  }
  if (!doc.contains("seed")) ps.error("missing required field \"seed\"");
  if (auto s = ps.count(doc, "seed", "")) c.seed = *s;

  if (doc.contains("model")) parse_model(ps, doc.at("model"), c.model);
  if (doc.contains("noise")) parse_noise(ps, doc.at("noise"), c.noise);

  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    if (!g.is_object()) {
      ps.error("grid must be an object");
    } else {
      ps.strict(g, "grid.", {"n", "T"});
      if (auto n = ps.count(g, "n", "grid.")) {
        if (*n >= 1) c.n = *n;
        else ps.error("grid.n must be at least 1");
      }
      if (auto t = ps.number(g, "T", "grid.")) {
        if (*t > 0.0) c.horizon = *t;
        else ps.error("grid.T must be positive");
      }
    }
  }

  if (auto ns = ps.list<std::size_t>(doc, "ns", "", &Parser::count)) {
    c.ns = *ns;
    bool ok = true;
    for (std::size_t i = 0; i < c.ns.size(); ++i) {
      if (c.ns[i] == 0 || (i > 0 && c.ns[i] <= c.ns[i - 1])) ok = false;
    }
    if (!ok) ps.error("ns must be positive and strictly increasing");
    else if (!c.ns.empty() && std::any_of(c.ns.begin(), c.ns.end(), [&](std::size_t n) { return c.ns.back() % n; }))
      ps.error("every entry of ns must divide the largest");
    else if (c.kind == "convergence" && c.ns.size() < 2)
      ps.error("ns needs at least two resolutions");
  }

  if (auto r = ps.count(doc, "replications", "")) {
    c.replications = *r;
    if (*r == 0 && !c.kind.empty() && c.kind != "simulate" && c.kind != "check-conditions")
      ps.error("replications must be at least 1 for kind " + c.kind);
  }

  if (auto p = ps.list<double>(doc, "p", "", &Parser::number)) {
    for (double v : *p) {
      if (in_unit(ps, v, "p")) c.p.push_back(v);
    }
  }
  if (auto q = ps.list<double>(doc, "q", "", &Parser::number)) {
    for (double v : *q) {
      if (in_unit(ps, v, "q")) c.q.push_back(v);
    }
  }
  if (auto a = in_unit(ps, ps.number(doc, "alpha", ""), "alpha")) c.alpha = *a;
  if (auto e = ps.number(doc, "epsilon", "")) {
    if (*e > 0.0) c.epsilon = *e;
    else ps.error("epsilon must be positive");
  }

  if (auto v = ps.list<std::string>(doc, "variant", "", &Parser::string)) {
    c.variants.clear();
    for (const auto& tag : *v) {
      if (tag == "a" || tag == "b" || tag == "c") c.variants.push_back(tag);
      else ps.error("variant must be one of a, b, c (got \"" + tag + "\")");
    }
  }
  if (auto e = ps.string(doc, "ensemble", "")) {
    if (*e == "gbm" || *e == "counterexample") c.ensemble = *e;
    else ps.error("ensemble must be gbm or counterexample");
  }
  if (doc.contains("enforce_preconditions")) {
    if (doc.at("enforce_preconditions").is_boolean()) c.enforce_preconditions = doc.at("enforce_preconditions").get<bool>();
    else ps.error("enforce_preconditions must be true or false");
  }

  if (auto v = ps.list<std::string>(doc, "conditions", "", &Parser::string)) {
    for (const auto& tag : *v) {
      if (tag.size() == 2 && tag[0] == 'C' && tag[1] >= '1' && tag[1] <= '5') c.conditions.push_back(tag);
      else ps.error("conditions must be drawn from C1..C5 (got \"" + tag + "\")");
    }
  }
  if (auto r = ps.number(doc, "radius", "")) {
    if (*r > 0.0) c.radius = *r;
    else ps.error("radius must be positive");
  }
  if (auto r = ps.number(doc, "sampler_radius", "")) {
    if (*r > 0.0) c.sampler_radius = *r;
    else ps.error("sampler_radius must be positive");
  }
  if (auto s = ps.count(doc, "samples", "")) {
    if (*s >= 1) c.samples = *s;
    else ps.error("samples must be at least 1");
  }

  if (doc.contains("generator")) {
    const json& g = doc.at("generator");
    std::optional<std::string> name;
    if (g.is_string()) {
      name = g.get<std::string>();
    } else if (g.is_object()) {
      ps.strict(g, "generator.", {"name", "steps", "rate", "sigma"});
      name = ps.string(g, "name", "generator.");
      if (!name) ps.error("missing required field generator.name");
      if (auto s = ps.count(g, "steps", "generator.")) {
        if (*s >= 1) c.steps = *s;
        else ps.error("generator.steps must be at least 1");
      }
      if (auto r = ps.number(g, "rate", "generator.")) {
        if (*r > 0.0) c.generator_rate = *r;
        else ps.error("generator.rate must be positive");
      }
      if (auto s = ps.number(g, "sigma", "generator.")) c.generator_sigma = *s;
    } else {
      ps.error("generator must be a name or an object");
    }
    if (name) {
      if (*name == "brownian_square" || *name == "poisson" || *name == "exponential_martingale") c.generator = *name;
      else ps.error("unknown generator \"" + *name + "\"");
    }
  }
  if (auto v = ps.number(doc, "c", "")) {
    if (*v > 0.0) c.tail_c = *v;
    else ps.error("c must be positive");
  }
  if (auto v = ps.number(doc, "d", "")) {
    if (*v > 0.0) c.tail_d = *v;
    else ps.error("d must be positive");
  }
  if (doc.contains("c") != doc.contains("d"))
    ps.error("the tail bound needs both c and d");

  if (auto t = ps.count(doc, "threads", "")) {
    if (*t >= 1) c.threads = *t;
    else ps.error("threads must be at least 1");
  }
  if (auto o = ps.string(doc, "output", "")) {
    if (o->empty()) ps.error("output must not be empty");
    else c.output = *o;
  }

  // Cross-field checks.
  const std::string& m = c.model.name;
  if ((m == "gbm" || m == "jump_gbm") && c.noise.wiener == 0) ps.error("model " + m + " needs noise.wiener >= 1");
  if (m == "jump_gbm" && !(c.noise.jump_rate > 0.0)) ps.error("model jump_gbm needs noise.jump_rate > 0");
  if (c.kind == "verify-gronwall") {
    if (c.ensemble == "gbm" && m != "gbm") ps.error("ensemble gbm needs model gbm");
    if (c.ensemble == "counterexample" && c.q.size() != 1) ps.error("ensemble counterexample needs exactly one q");
  }

  if (!ps.errors.empty()) throw ConfigError(ps.errors);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read configuration " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

void apply_overrides(ExperimentConfig& config, const Overrides& flags, const EnvLookup& env) {
  std::vector<std::string> errors;
  auto parse_unsigned = [&](const std::string& name, const std::string& text) -> std::optional<std::uint64_t> {
    try {
      std::size_t used = 0;
      if (!text.empty() && text[0] != '-') {
        const unsigned long long v = std::stoull(text, &used);
        if (used == text.size()) return v;
      }
    } catch (const std::exception&) {
    }
    errors.push_back(name + " must be a non-negative integer (got \"" + text + "\")");
    return std::nullopt;
  };
  if (env) {
    if (auto s = env("SDE_SEED")) {
      if (auto v = parse_unsigned("SDE_SEED", *s)) config.seed = *v;
    }
    if (auto s = env("SDE_THREADS")) {
      if (auto v = parse_unsigned("SDE_THREADS", *s)) {
        if (*v >= 1) config.threads = *v;
        else errors.push_back("SDE_THREADS must be at least 1");
      }
    }
  }
  if (flags.seed) config.seed = *flags.seed;
  if (flags.threads) {
    if (*flags.threads >= 1) config.threads = *flags.threads;
    else errors.push_back("--threads must be at least 1");
  }
  if (flags.output) config.output = *flags.output;
  if (!errors.empty()) throw ConfigError(errors);
}

std::size_t effective_threads(const ExperimentConfig& config) {
  if (config.threads) return *config.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

RunResult run_experiment(const ExperimentConfig& config) {
  const std::size_t threads = effective_threads(config);
  Artifacts art(config.output);
  Outcome out;
  if (config.kind == "simulate") out = run_simulate(config, threads, art);
  else if (config.kind == "convergence") out = run_convergence(config, threads, art);
  else if (config.kind == "verify-gronwall") out = run_gronwall(config, threads, art);
  else if (config.kind == "lenglart") out = run_lenglart(config, threads, art);
  else if (config.kind == "counterexample") out = run_counterexample(config, art);
  else if (config.kind == "check-conditions") out = run_conditions(config, threads, art);
  else throw ArgumentError("unknown kind \"" + config.kind + "\"");

  json report{
      {"metadata", {{"kind", config.kind}, {"seed", config.seed}, {"timestamp", timestamp()}}},
      {"config", config_echo(config)},
      {"results", out.results},
      {"verdict", out.verdict},
  };
  art.add("report.json", report.dump(2) + "\n");

  RunResult result;
  result.exit_code = out.violated ? 2 : 0;
  result.verdict = out.verdict;
  result.artifacts = art.flush();
  return result;
}

}  // namespace sde
