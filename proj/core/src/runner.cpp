#include "stasim/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "stasim/analytics.hpp"
#include "stasim/quantum.hpp"
#include "stasim/rng.hpp"
#include "stasim/statistics.hpp"

namespace stasim {

using nlohmann::json;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::classical_work_dist: return "classical-work-dist";
    case ExperimentKind::jarzynski_trace: return "jarzynski-trace";
    case ExperimentKind::quantum_work_atoms: return "quantum-work-atoms";
    case ExperimentKind::engine_curves: return "engine-curves";
    case ExperimentKind::verify: return "verify";
  }
  return "unknown";
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

bool RunResult::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string child_path(const std::string& parent, std::string_view key) {
  return parent + "." + std::string(key);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

void allow_keys(const json& obj, const std::string& path,
                std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(child_path(path, key), "unknown field");
    }
  }
}

double number_at(const json& value, const std::string& path, bool positive) {
  if (!value.is_number()) throw ConfigError(path, "expected a number");
  const double x = value.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  if (positive && !(x > 0.0)) throw ConfigError(path, "must be positive");
  return x;
}

double get_number(const json& obj, const std::string& path, std::string_view key,
                  std::optional<double> fallback, bool positive = true) {
  const std::string p = child_path(path, key);
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    if (!fallback) throw ConfigError(p, "required field is missing");
    return *fallback;
  }
  return number_at(*it, p, positive);
}

std::size_t get_count(const json& obj, const std::string& path, std::string_view key,
                      std::optional<std::size_t> fallback) {
  const std::string p = child_path(path, key);
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    if (!fallback) throw ConfigError(p, "required field is missing");
    return *fallback;
  }
  if (!it->is_number_unsigned()) throw ConfigError(p, "expected a non-negative integer");
  return it->get<std::size_t>();
}

std::string get_string(const json& obj, const std::string& path, std::string_view key,
                       std::optional<std::string> fallback) {
  const std::string p = child_path(path, key);
  auto it = obj.find(std::string(key));
  if (it == obj.end()) {
    if (!fallback) throw ConfigError(p, "required field is missing");
    return *fallback;
  }
  if (!it->is_string()) throw ConfigError(p, "expected a string");
  return it->get<std::string>();
}

const json* get_object(const json& obj, const std::string& path, std::string_view key) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return nullptr;
  require_object(*it, child_path(path, key));
  return &*it;
}

ExperimentKind parse_kind(const std::string& text, const std::string& path) {
  for (auto k : {ExperimentKind::classical_work_dist, ExperimentKind::jarzynski_trace,
                 ExperimentKind::quantum_work_atoms, ExperimentKind::engine_curves,
                 ExperimentKind::verify}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError(path, "unknown experiment '" + text + "'");
}

FrequencyProtocol parse_protocol(const json& j, const std::string& path) {
  require_object(j, path);
  const std::string kind = get_string(j, path, "kind", std::nullopt);
  try {
    if (kind == "cosine-ramp") {
      allow_keys(j, path, {"kind", "omega_i", "omega_f", "tau"});
      return FrequencyProtocol::cosine_ramp(get_number(j, path, "omega_i", std::nullopt),
                                            get_number(j, path, "omega_f", std::nullopt),
                                            get_number(j, path, "tau", std::nullopt));
    }
    if (kind == "constant") {
      allow_keys(j, path, {"kind", "omega", "tau"});
      return FrequencyProtocol::constant(get_number(j, path, "omega", std::nullopt),
                                         get_number(j, path, "tau", std::nullopt));
    }
    if (kind == "table") {
      allow_keys(j, path, {"kind", "samples"});
      const std::string sp = child_path(path, "samples");
      auto it = j.find("samples");
      if (it == j.end() || !it->is_array()) throw ConfigError(sp, "expected an array of [t, omega]");
      std::vector<std::pair<double, double>> samples;
      for (std::size_t i = 0; i < it->size(); ++i) {
        const std::string ip = sp + "[" + std::to_string(i) + "]";
        const json& row = (*it)[i];
        if (!row.is_array() || row.size() != 2) throw ConfigError(ip, "expected [t, omega]");
        samples.emplace_back(number_at(row[0], ip + "[0]", false), number_at(row[1], ip + "[1]", false));
      }
      return FrequencyProtocol::table(std::move(samples));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(child_path(path, "kind"), "unknown protocol kind '" + kind + "'");
}

std::vector<Drive> parse_drives(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array");
  std::vector<Drive> drives;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ip = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_string()) throw ConfigError(ip, "expected a string");
    const auto s = j[i].get<std::string>();
    if (s == to_string(Drive::bare)) {
      drives.push_back(Drive::bare);
    } else if (s == to_string(Drive::counterdiabatic)) {
      drives.push_back(Drive::counterdiabatic);
    } else {
      throw ConfigError(ip, "unknown drive '" + s + "'");
    }
  }
  return drives;
}

std::vector<double> parse_number_list(const json& j, const std::string& path, bool positive) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(number_at(j, path, positive));
    return out;
  }
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a number or a non-empty array");
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(number_at(j[i], path + "[" + std::to_string(i) + "]", positive));
  }
  return out;
}

void parse_sections(const json& root, ExperimentConfig& c) {
  const std::string r = "$";
  if (const json* phys = get_object(root, r, "physics")) {
    const std::string p = "$.physics";
    allow_keys(*phys, p, {"beta", "mass", "hbar"});
    c.beta = get_number(*phys, p, "beta", c.beta);
    c.mass = get_number(*phys, p, "mass", c.mass);
    c.hbar = get_number(*phys, p, "hbar", c.hbar);
  }
  if (auto it = root.find("protocol"); it != root.end()) c.protocol = parse_protocol(*it, "$.protocol");
  if (auto it = root.find("drives"); it != root.end()) c.drives = parse_drives(*it, "$.drives");

  if (const json* s = get_object(root, r, "classical")) {
    const std::string p = "$.classical";
    allow_keys(*s, p, {"samples", "tolerance", "bins", "grid"});
    c.classical.samples = get_count(*s, p, "samples", c.classical.samples);
    c.classical.tolerance = get_number(*s, p, "tolerance", c.classical.tolerance);
    if (s->contains("bins")) c.classical.bins = get_count(*s, p, "bins", std::nullopt);
    if (const json* g = get_object(*s, p, "grid")) {
      const std::string gp = p + ".grid";
      allow_keys(*g, gp, {"lower", "upper", "points"});
      c.classical.grid.lower = get_number(*g, gp, "lower", c.classical.grid.lower, false);
      c.classical.grid.upper = get_number(*g, gp, "upper", c.classical.grid.upper, false);
      c.classical.grid.points = get_count(*g, gp, "points", c.classical.grid.points);
      if (!(c.classical.grid.upper > c.classical.grid.lower) || c.classical.grid.lower < 0.0) {
        throw ConfigError(gp, "needs 0 <= lower < upper");
      }
      if (c.classical.grid.points < 2) throw ConfigError(gp + ".points", "needs at least 2 points");
    }
    if (c.classical.samples < 2) throw ConfigError(p + ".samples", "needs at least 2 samples");
    if (c.classical.bins && *c.classical.bins == 0) throw ConfigError(p + ".bins", "must be positive");
  }
  if (const json* s = get_object(root, r, "jarzynski")) {
    const std::string p = "$.jarzynski";
    allow_keys(*s, p, {"samples", "trace_points", "batch_size", "replicates", "tolerance"});
    auto& js = c.jarzynski;
    js.samples = get_count(*s, p, "samples", js.samples);
    js.trace_points = get_count(*s, p, "trace_points", js.trace_points);
    js.batch_size = get_count(*s, p, "batch_size", js.batch_size);
    js.replicates = get_count(*s, p, "replicates", js.replicates);
    js.tolerance = get_number(*s, p, "tolerance", js.tolerance);
    if (js.batch_size == 0 || js.samples / js.batch_size < 2) {
      throw ConfigError(p + ".batch_size", "samples must hold at least two batches");
    }
    if (js.trace_points == 0) throw ConfigError(p + ".trace_points", "must be positive");
  }
  if (const json* s = get_object(root, r, "quantum")) {
    const std::string p = "$.quantum";
    allow_keys(*s, p, {"dimension", "n_max", "m_max", "tolerance", "alternate_hbar", "display_floor"});
    auto& q = c.quantum;
    q.dimension = get_count(*s, p, "dimension", q.dimension);
    if (s->contains("n_max")) q.n_max = get_count(*s, p, "n_max", std::nullopt);
    q.m_max = get_count(*s, p, "m_max", q.m_max);
    q.tolerance = get_number(*s, p, "tolerance", q.tolerance);
    if (s->contains("alternate_hbar")) q.alternate_hbar = get_number(*s, p, "alternate_hbar", std::nullopt);
    q.display_floor = get_number(*s, p, "display_floor", q.display_floor);
    if (q.dimension < 4 || q.dimension % 2 != 0) {
      throw ConfigError(p + ".dimension", "must be even and at least 4");
    }
    if (q.m_max > q.dimension) throw ConfigError(p + ".m_max", "must not exceed the dimension");
    if (q.n_max && (*q.n_max == 0 || *q.n_max > q.dimension / 2)) {
      throw ConfigError(p + ".n_max", "must lie in [1, dimension / 2]");
    }
  }
  if (const json* s = get_object(root, r, "engine")) {
    const std::string p = "$.engine";
    allow_keys(*s, p, {"regime", "beta_cold", "omega_i", "ratios"});
    auto& e = c.engine;
    const std::string regime = get_string(*s, p, "regime", "classical");
    if (regime == "classical") {
      e.regime = Regime::classical;
    } else if (regime == "quantum") {
      e.regime = Regime::quantum;
    } else {
      throw ConfigError(p + ".regime", "expected 'classical' or 'quantum'");
    }
    if (auto it = s->find("beta_cold"); it != s->end()) e.beta_cold = parse_number_list(*it, p + ".beta_cold", true);
    e.omega_i = get_number(*s, p, "omega_i", e.omega_i);
    if (auto it = s->find("ratios"); it != s->end()) {
      e.ratios = parse_number_list(*it, p + ".ratios", true);
      for (std::size_t i = 0; i < e.ratios.size(); ++i) {
        if (e.ratios[i] < 1.0) {
          throw ConfigError(p + ".ratios[" + std::to_string(i) + "]", "beta_cold / beta_hot must be >= 1");
        }
      }
    }
  }
  if (c.engine.ratios.empty()) c.engine.ratios = {1, 1.5, 2, 3, 5, 7, 10, 15, 20, 30, 50, 70, 100};
  if (const json* s = get_object(root, r, "verify")) {
    const std::string p = "$.verify";
    allow_keys(*s, p, {"trajectories", "states", "dimension", "carnot_grid"});
    auto& v = c.verify;
    v.trajectories = get_count(*s, p, "trajectories", v.trajectories);
    v.states = get_count(*s, p, "states", v.states);
    v.dimension = get_count(*s, p, "dimension", v.dimension);
    v.carnot_grid = get_count(*s, p, "carnot_grid", v.carnot_grid);
    if (v.dimension < 64 || v.dimension % 2 != 0) {
      throw ConfigError(p + ".dimension", "must be even and at least 64");
    }
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  require_object(root, "$");
  allow_keys(root, "$", {"version", "experiment", "name", "seed", "output_dir", "physics", "protocol",
                         "drives", "classical", "jarzynski", "quantum", "engine", "verify"});

  ExperimentConfig c;
  auto version = root.find("version");
  if (version == root.end()) throw ConfigError("$.version", "required field is missing");
  if (!version->is_number_integer() || version->get<int>() != kConfigVersion) {
    throw ConfigError("$.version", "unsupported version (expected " + std::to_string(kConfigVersion) + ")");
  }
  c.kind = parse_kind(get_string(root, "$", "experiment", std::nullopt), "$.experiment");
  c.name = get_string(root, "$", "name", to_string(c.kind));
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("$.name", "must be a non-empty file stem");
  }
  c.seed = root.contains("seed") ? get_count(root, "$", "seed", std::nullopt) : 0;
  c.output_dir = get_string(root, "$", "output_dir", "out");
  parse_sections(root, c);

  const bool needs_protocol = c.kind == ExperimentKind::classical_work_dist ||
                              c.kind == ExperimentKind::jarzynski_trace ||
                              c.kind == ExperimentKind::quantum_work_atoms;
  if (needs_protocol) {
    if (!c.protocol) throw ConfigError("$.protocol", "required for " + to_string(c.kind));
    try {
      require_valid(*c.protocol);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("$.protocol", e.what());
    }
  }
  if (c.kind == ExperimentKind::classical_work_dist && !(c.protocol->omega_f() > c.protocol->omega_i())) {
    throw ConfigError("$.protocol", "classical-work-dist needs omega_f > omega_i");
  }
  c.canonical = root.dump();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("$", "cannot open " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ExperimentConfig default_verify_config() {
  return parse_config(R"({"version": 1, "experiment": "verify", "name": "verify"})");
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_schema() {
  const json number = {{"type", "number"}};
  const json positive = {{"type", "number"}, {"exclusiveMinimum", 0}};
  const json count = {{"type", "integer"}, {"minimum", 0}};
  const json numbers = {{"oneOf", json::array({positive, {{"type", "array"}, {"items", positive}}})}};
  json protocol = {
      {"type", "object"},
      {"required", {"kind"}},
      {"properties",
       {{"kind", {{"enum", {"cosine-ramp", "constant", "table"}}}},
        {"omega_i", positive},
        {"omega_f", positive},
        {"omega", positive},
        {"tau", positive},
        {"samples",
         {{"type", "array"},
          {"items", {{"type", "array"}, {"items", number}, {"minItems", 2}, {"maxItems", 2}}}}}}}};
  json schema = {
      {"$schema", "https://json-schema.org/draft/2020-12/schema"},
      {"title", "stasim experiment configuration"},
      {"type", "object"},
      {"required", {"version", "experiment"}},
      {"additionalProperties", false},
      {"properties",
       {{"version", {{"const", kConfigVersion}}},
        {"experiment",
         {{"enum", {"classical-work-dist", "jarzynski-trace", "quantum-work-atoms", "engine-curves", "verify"}}}},
        {"name", {{"type", "string"}}},
        {"seed", count},
        {"output_dir", {{"type", "string"}}},
        {"physics",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties", {{"beta", positive}, {"mass", positive}, {"hbar", positive}}}}},
        {"protocol", protocol},
        {"drives", {{"type", "array"}, {"items", {{"enum", {"bare", "counterdiabatic"}}}}}},
        {"classical",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"samples", count},
            {"tolerance", positive},
            {"bins", count},
            {"grid",
             {{"type", "object"},
              {"properties", {{"lower", number}, {"upper", number}, {"points", count}}}}}}}}},
        {"jarzynski",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"samples", count},
            {"trace_points", count},
            {"batch_size", count},
            {"replicates", count},
            {"tolerance", positive}}}}},
        {"quantum",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"dimension", count},
            {"n_max", count},
            {"m_max", count},
            {"tolerance", positive},
            {"alternate_hbar", positive},
            {"display_floor", positive}}}}},
        {"engine",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"regime", {{"enum", {"classical", "quantum"}}}},
            {"beta_cold", numbers},
            {"omega_i", positive},
            {"ratios", numbers}}}}},
        {"verify",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"trajectories", count}, {"states", count}, {"dimension", count}, {"carnot_grid", count}}}}}}}};
  return schema.dump(2);
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options) {
  if (options.out_dir) return *options.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return config.output_dir;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& hash, std::uint64_t seed,
          const std::vector<std::string>& columns)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << "# config_hash=" << hash << " seed=" << seed << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      out_ << (first ? "" : ",") << format_number(v);
      first = false;
    }
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

struct Context {
  const ExperimentConfig& config;
  std::filesystem::path dir;
  std::string hash;
  unsigned threads;
  RunResult& result;
  json& summary;

  CsvFile csv(const std::string& suffix, const std::vector<std::string>& columns) {
    auto path = dir / (config.name + "_" + suffix + ".csv");
    result.files.push_back(path);
    return CsvFile(path, hash, config.seed, columns);
  }

  void check(std::string name, double value, double threshold, bool pass) {
    summary["checks"].push_back({{"name", name}, {"value", value}, {"threshold", threshold}, {"pass", pass}});
    result.checks.push_back({std::move(name), value, threshold, pass});
  }
};

json protocol_json(const FrequencyProtocol& p) {
  return {{"kind", to_string(p.kind())},
          {"omega_i", p.omega_i()},
          {"omega_f", p.omega_f()},
          {"tau", p.tau()},
          {"description", p.describe()}};
}

double relative_error(double value, double reference) {
  return std::abs(value - reference) / std::abs(reference);
}

void emit_density_grid(Context& ctx, const std::string& suffix, const GridSpec& grid,
                       const std::vector<std::string>& columns,
                       const std::vector<std::function<double(double)>>& densities) {
  std::vector<std::string> header{"W"};
  header.insert(header.end(), columns.begin(), columns.end());
  auto path = ctx.dir / (ctx.config.name + "_" + suffix + ".csv");
  ctx.result.files.push_back(path);
  std::ofstream out(path);
  out << "# config_hash=" << ctx.hash << " seed=" << ctx.config.seed << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (std::size_t k = 0; k < grid.points; ++k) {
    const double w = grid.lower + (grid.upper - grid.lower) * static_cast<double>(k) /
                                      static_cast<double>(grid.points - 1);
    out << format_number(w);
    for (const auto& f : densities) out << "," << format_number(f(w));
    out << "\n";
  }
}

void emit_atoms(Context& ctx, const std::string& suffix, const QuantumWorkAtoms& atoms, double floor) {
  auto file = ctx.csv(suffix, {"W", "probability", "log10_probability", "displayed"});
  for (const auto& a : atoms.atoms) {
    const double lg = a.probability > 0.0 ? std::log10(a.probability) : -std::numeric_limits<double>::infinity();
    file.row({a.work, a.probability, lg, a.probability >= floor ? 1.0 : 0.0});
  }
}

void run_classical(Context& ctx) {
  const auto& c = ctx.config;
  const auto& p = *c.protocol;
  const double wi = p.omega_i();
  const double wf = p.omega_f();
  const OscillatorParams params{c.mass};
  const auto basic = basic_solutions(p);
  const auto form = quadratic_form(basic, c.beta, wi, wf);
  const auto form_moments = moments_from_form(form);
  const double adiabatic_mean = (wf - wi) / (wi * c.beta);

  ctx.summary["parameters"] = {{"beta", c.beta}, {"mass", c.mass}, {"protocol", protocol_json(p)},
                               {"samples", c.classical.samples}, {"tolerance", c.classical.tolerance}};
  ctx.summary["analytic"] = {
      {"adiabatic", {{"mean", adiabatic_mean}, {"stddev", adiabatic_mean}}},
      {"nonadiabatic",
       {{"mean", form_moments.mean}, {"stddev", form_moments.stddev}, {"mu_plus", form.mu_plus},
        {"mu_minus", form.mu_minus}, {"wronskian", basic.wronskian()}}},
      {"sudden",
       {{"mean", (wf * wf - wi * wi) / (2.0 * c.beta * wi * wi)},
        {"stddev", (wf * wf - wi * wi) / (std::sqrt(2.0) * c.beta * wi * wi)}}}};

  for (Drive drive : c.drives) {
    const std::string tag = to_string(drive);
    const EnsembleSpec spec{c.beta, c.classical.samples, c.seed};
    const auto work = ensemble_work(spec, p, drive, params, EnsembleMethod::per_trajectory, ctx.threads,
                                    c.classical.tolerance);
    const auto s = summary(work);
    std::function<double(double)> density;
    double mean_ref = 0.0;
    double sd_ref = 0.0;
    double tol_moments = 0.0;
    if (drive == Drive::counterdiabatic) {
      density = [&](double w) { return pdf_adiabatic(w, c.beta, wi, wf); };
      mean_ref = sd_ref = adiabatic_mean;
      tol_moments = 0.01;
    } else {
      density = [&](double w) { return pdf_nonadiabatic(w, form); };
      mean_ref = form_moments.mean;
      sd_ref = form_moments.stddev;
      tol_moments = 0.02;
    }
    const double ks = ks_distance(work, AnalyticCdf(density));

    BinSpec bins;
    bins.bins = c.classical.bins.value_or(default_bin_count(work.size()));
    bins.lower = c.classical.grid.lower;
    bins.upper = c.classical.grid.upper;
    const auto h = histogram(work, bins);
    const double in_range = static_cast<double>(std::count_if(work.begin(), work.end(), [&](double w) {
                              return w >= bins.lower && w <= bins.upper;
                            })) / static_cast<double>(work.size());
    auto file = ctx.csv(tag + "_histogram", {"W", "density", "analytic_density"});
    for (std::size_t i = 0; i < h.density.size(); ++i) {
      file.row({h.center(i), h.density[i] * in_range, density(h.center(i))});
    }

    ctx.summary["drives"][tag] = {{"mean", s.mean},
                                  {"stddev", s.stddev},
                                  {"mean_stderr", s.mean_stderr},
                                  {"stddev_stderr", s.stddev_stderr},
                                  {"min", *std::min_element(work.begin(), work.end())},
                                  {"ks_distance", ks},
                                  {"fraction_in_histogram_range", in_range}};
    ctx.check(tag + ".ks_distance", ks, 0.02, ks < 0.02);
    const double em = relative_error(s.mean, mean_ref);
    const double es = relative_error(s.stddev, sd_ref);
    ctx.check(tag + ".mean_relative_error", em, tol_moments, em < tol_moments);
    ctx.check(tag + ".stddev_relative_error", es, tol_moments, es < tol_moments);
  }

  emit_density_grid(ctx, "analytic", c.classical.grid, {"adiabatic", "nonadiabatic", "sudden"},
                    {[&](double w) { return pdf_adiabatic(w, c.beta, wi, wf); },
                     [&](double w) { return pdf_nonadiabatic(w, form); },
                     [&](double w) { return pdf_sudden(w, c.beta, wi, wf); }});
}

std::vector<std::size_t> trace_indices(std::size_t total, std::size_t points) {
  std::vector<std::size_t> idx;
  const double span = std::log(static_cast<double>(total));
  for (std::size_t k = 0; k < points; ++k) {
    const double f = points == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(points - 1);
    const auto n = static_cast<std::size_t>(std::llround(std::exp(f * span)));
    const std::size_t clamped = std::clamp<std::size_t>(n, 1, total);
    if (idx.empty() || idx.back() != clamped) idx.push_back(clamped);
  }
  if (idx.back() != total) idx.push_back(total);
  return idx;
}

void run_jarzynski(Context& ctx) {
  const auto& c = ctx.config;
  const auto& js = c.jarzynski;
  const auto& p = *c.protocol;
  const OscillatorParams params{c.mass};
  const double df = delta_f_classical(c.beta, p.omega_i(), p.omega_f());
  const double target = std::exp(-c.beta * df);
  const std::size_t batches = js.samples / js.batch_size;

  ctx.summary["parameters"] = {{"beta", c.beta}, {"mass", c.mass}, {"protocol", protocol_json(p)},
                               {"samples", js.samples}, {"batch_size", js.batch_size},
                               {"replicates", js.replicates}};
  ctx.summary["target"] = target;
  ctx.summary["delta_f"] = df;

  std::vector<JarzynskiTrace> traces;
  for (Drive drive : c.drives) {
    const std::string tag = to_string(drive);
    const EnsembleSpec spec{c.beta, js.samples, c.seed};
    const auto work = ensemble_work(spec, p, drive, params, EnsembleMethod::per_trajectory, ctx.threads,
                                    js.tolerance);
    traces.push_back(jarzynski(work, c.beta, target));
    const auto& t = traces.back();
    const double err = std::abs(t.estimate - target);
    ctx.summary["drives"][tag] = {{"estimate", t.estimate},
                                  {"estimate_stderr", t.estimate_stderr},
                                  {"absolute_error", err},
                                  {"batch_variance", estimator_dispersion(work, c.beta, batches)},
                                  {"dissipated_work", dissipated_work(work, df)}};
    ctx.check(tag + ".jarzynski_error", err, 0.01, err < 0.01);
  }

  {
    std::vector<std::string> columns{"n"};
    for (Drive d : c.drives) columns.push_back(to_string(d));
    columns.push_back("target");
    auto path = ctx.dir / (c.name + "_trace.csv");
    ctx.result.files.push_back(path);
    std::ofstream out(path);
    out << "# config_hash=" << ctx.hash << " seed=" << c.seed << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << "\n";
    for (std::size_t n : trace_indices(js.samples, js.trace_points)) {
      out << n;
      for (const auto& t : traces) out << "," << format_number(t.running[n - 1]);
      out << "," << format_number(target) << "\n";
    }
  }

  if (js.replicates == 0) return;
  // Replicates use the flow map; drives share initial states within a replicate.
  std::vector<FlowMap> maps;
  for (Drive d : c.drives) maps.push_back(flow_map(p, d, params, js.tolerance));
  std::vector<std::vector<double>> dispersion(js.replicates, std::vector<double>(c.drives.size()));
  std::vector<std::uint64_t> seeds(js.replicates);
  for (std::size_t r = 0; r < js.replicates; ++r) seeds[r] = StreamRng(c.seed, r).next();
  parallel_for(js.replicates, ctx.threads, [&](std::size_t r) {
    std::vector<PhaseState> initial(js.samples);
    for (std::size_t i = 0; i < js.samples; ++i) {
      initial[i] = gibbs_sample(seeds[r], i, c.beta, p.omega_i(), params);
    }
    std::vector<double> work(js.samples);
    for (std::size_t d = 0; d < c.drives.size(); ++d) {
      for (std::size_t i = 0; i < js.samples; ++i) {
        work[i] = trajectory_work(initial[i], apply_flow(maps[d], initial[i]), p, params);
      }
      dispersion[r][d] = estimator_dispersion(work, c.beta, batches);
    }
  });

  std::vector<std::string> columns{"replicate", "seed"};
  for (Drive d : c.drives) columns.push_back(to_string(d) + "_batch_variance");
  auto path = ctx.dir / (c.name + "_replicates.csv");
  ctx.result.files.push_back(path);
  std::ofstream out(path);
  out << "# config_hash=" << ctx.hash << " seed=" << c.seed << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";
  for (std::size_t r = 0; r < js.replicates; ++r) {
    out << r << "," << seeds[r];
    for (double v : dispersion[r]) out << "," << format_number(v);
    out << "\n";
  }

  auto cd = std::find(c.drives.begin(), c.drives.end(), Drive::counterdiabatic);
  auto bare = std::find(c.drives.begin(), c.drives.end(), Drive::bare);
  if (cd != c.drives.end() && bare != c.drives.end()) {
    const auto icd = static_cast<std::size_t>(cd - c.drives.begin());
    const auto ib = static_cast<std::size_t>(bare - c.drives.begin());
    std::size_t wins = 0;
    for (const auto& row : dispersion) wins += row[icd] < row[ib] ? 1 : 0;
    const double fraction = static_cast<double>(wins) / static_cast<double>(js.replicates);
    ctx.summary["replicates"] = {{"counterdiabatic_smaller_fraction", fraction}, {"count", js.replicates}};
    ctx.check("counterdiabatic_smaller_batch_variance_fraction", fraction, 0.95, fraction >= 0.95);
  }
}

json quantum_block(Context& ctx, double hbar, const std::string& suffix, bool record_checks) {
  const auto& c = ctx.config;
  const auto& q = c.quantum;
  const auto& p = *c.protocol;
  const double wi = p.omega_i();
  const double wf = p.omega_f();
  FockBasisConfig cfg;
  cfg.dimension = q.dimension;
  cfg.omega_ref = wi;
  cfg.mass = c.mass;
  cfg.hbar = hbar;
  const std::size_t n_max = std::min(
      std::max(q.n_max.value_or(0), levels_for_tail(c.beta, wi, hbar, 1e-12)), q.dimension / 2);
  const double df = delta_f_quantum(c.beta, wi, wf, hbar);
  const double target = std::exp(-c.beta * df);

  json block = {{"hbar", hbar}, {"n_max", n_max}, {"delta_f", df}, {"jarzynski_target", target}};
  for (Drive drive : c.drives) {
    const std::string tag = to_string(drive);
    const auto tm = transition_matrix(p, drive, cfg, n_max, q.m_max, q.tolerance);
    const auto atoms = quantum_work_atoms(tm, c.beta, wi, wf, hbar);
    const auto jz = jarzynski(atoms, c.beta, target);
    const double jz_err = std::abs(jz.estimate - target);
    double min_row = 1.0;
    for (std::size_t n = 0; n < tm.rows(); ++n) min_row = std::min(min_row, tm.row_sum(n));
    json entry = {{"mean", atoms.mean()},
                  {"stddev", atoms.stddev()},
                  {"probability_negative_work", atoms.probability_below(0.0)},
                  {"total_probability", atoms.total_probability()},
                  {"discarded_gibbs_tail", atoms.discarded_tail},
                  {"jarzynski_estimate", jz.estimate},
                  {"jarzynski_error", jz_err},
                  {"max_leakage", tm.max_leakage},
                  {"min_row_sum", min_row},
                  {"ground_to_ground", tm.probability(0, 0)},
                  {"atoms", atoms.atoms.size()}};
    if (record_checks) ctx.check(tag + ".jarzynski_error", jz_err, 1e-6, jz_err <= 1e-6);

    if (drive == Drive::counterdiabatic) {
      const auto closed = pdf_quantum_adiabatic(c.beta, wi, wf, hbar, n_max);
      double worst = 0.0;
      double matched = 0.0;
      for (const auto& a : closed.atoms) {
        auto it = std::lower_bound(atoms.atoms.begin(), atoms.atoms.end(),
                                   a.work - kAtomMergeTolerance * std::max(1.0, std::abs(a.work)),
                                   [](const WorkAtom& x, double w) { return x.work < w; });
        double prob = 0.0;
        if (it != atoms.atoms.end() &&
            std::abs(it->work - a.work) <= kAtomMergeTolerance * std::max(1.0, std::abs(a.work))) {
          prob = it->probability;
        }
        matched += prob;
        worst = std::max(worst, std::abs(prob - a.probability));
      }
      worst = std::max(worst, atoms.total_probability() - matched);
      entry["closed_form_max_deviation"] = worst;
      entry["closed_form_stddev"] = closed.stddev();
      const double neg = atoms.probability_below(0.0);
      if (record_checks) {
        ctx.check(tag + ".closed_form_deviation", worst, 1e-6, worst <= 1e-6);
        ctx.check(tag + ".negative_work_probability", neg, 1e-12, neg <= 1e-12);
      }
    }
    block["drives"][tag] = entry;
    emit_atoms(ctx, tag + suffix + "_atoms", atoms, q.display_floor);
  }
  return block;
}

void run_quantum(Context& ctx) {
  const auto& c = ctx.config;
  const auto& q = c.quantum;
  ctx.summary["parameters"] = {{"beta", c.beta}, {"mass", c.mass}, {"protocol", protocol_json(*c.protocol)},
                               {"dimension", q.dimension}, {"m_max", q.m_max}, {"tolerance", q.tolerance},
                               {"display_floor", q.display_floor}};
  ctx.summary["hbar_convention"] = {
      {"hbar", c.hbar},
      {"alternate_hbar", q.alternate_hbar ? json(*q.alternate_hbar) : json(nullptr)},
      {"note", "hbar is a free dimensionless parameter; results for the alternate value are "
               "reported alongside under 'alternate'"}};
  ctx.summary["primary"] = quantum_block(ctx, c.hbar, "", true);
  if (q.alternate_hbar) ctx.summary["alternate"] = quantum_block(ctx, *q.alternate_hbar, "_alternate", false);
}

void run_engine(Context& ctx) {
  const auto& c = ctx.config;
  const auto& e = c.engine;
  const PhysicalConstants constants{c.mass, c.hbar};
  ctx.summary["parameters"] = {{"regime", e.regime == Regime::classical ? "classical" : "quantum"},
                               {"omega_i", e.omega_i}, {"hbar", c.hbar}, {"mass", c.mass},
                               {"beta_cold", e.beta_cold}, {"ratios", e.ratios}};
  double carnot_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < e.beta_cold.size(); ++b) {
    const double beta_cold = e.beta_cold[b];
    std::vector<EfficiencyPoint> points(e.ratios.size());
    parallel_for(e.ratios.size(), ctx.threads, [&](std::size_t i) {
      points[i] = efficiency_curves(e.regime, beta_cold, e.omega_i, std::span(&e.ratios[i], 1), constants)[0];
    });
    auto file = ctx.csv("beta_cold_" + std::to_string(b),
                        {"beta_ratio", "eta_sta", "eta_sudden", "eta_adiabatic_classical",
                         "eta_sudden_classical"});
    double min_gain = std::numeric_limits<double>::infinity();
    double max_dev = 0.0;
    json rows = json::array();
    for (const auto& pt : points) {
      file.row({pt.beta_ratio, pt.eta_sta, pt.eta_sudden, pt.eta_adiabatic_closed_form,
                pt.eta_sudden_closed_form});
      const double carnot = 1.0 - 1.0 / pt.beta_ratio;
      carnot_excess = std::max({carnot_excess, pt.eta_sta - carnot, pt.eta_sudden - carnot});
      if (pt.beta_ratio > 1.0 && pt.eta_sudden > 0.0) min_gain = std::min(min_gain, pt.eta_sta / pt.eta_sudden);
      if (pt.beta_ratio > 1.0) {
        max_dev = std::max({max_dev, relative_error(pt.eta_sta, pt.eta_adiabatic_closed_form),
                            relative_error(pt.eta_sudden, pt.eta_sudden_closed_form)});
      }
      rows.push_back({{"beta_ratio", pt.beta_ratio}, {"eta_sta", pt.eta_sta}, {"eta_sudden", pt.eta_sudden}});
    }
    ctx.summary["curves"].push_back({{"beta_cold", beta_cold},
                                     {"file", c.name + "_beta_cold_" + std::to_string(b) + ".csv"},
                                     {"min_sta_over_sudden", std::isfinite(min_gain) ? json(min_gain) : json(nullptr)},
                                     {"max_relative_deviation_from_classical", max_dev},
                                     {"points", rows}});
  }
  ctx.check("carnot_bound_excess", carnot_excess, 1e-12, carnot_excess <= 1e-12);
}

void run_verify(Context& ctx) {
  const auto checks = verification_suite(ctx.config.verify, ctx.config.seed, ctx.threads);
  ctx.summary["parameters"] = {{"trajectories", ctx.config.verify.trajectories},
                               {"states", ctx.config.verify.states},
                               {"dimension", ctx.config.verify.dimension},
                               {"carnot_grid", ctx.config.verify.carnot_grid}};
  for (const auto& ch : checks) ctx.check(ch.name, ch.value, ch.threshold, ch.pass);
}

}  // namespace

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentConfig cfg = config;
  if (options.seed) cfg.seed = *options.seed;
  RunResult result;
  json summary = {{"experiment", to_string(cfg.kind)},
                  {"name", cfg.name},
                  {"version", cfg.version},
                  {"seed", cfg.seed},
                  {"config_hash", config_hash(cfg)},
                  {"checks", json::array()}};
  Context ctx{cfg, resolve_output_dir(cfg, options), config_hash(cfg), std::max(1u, options.threads),
              result, summary};
  std::filesystem::create_directories(ctx.dir);

  switch (cfg.kind) {
    case ExperimentKind::classical_work_dist: run_classical(ctx); break;
    case ExperimentKind::jarzynski_trace: run_jarzynski(ctx); break;
    case ExperimentKind::quantum_work_atoms: run_quantum(ctx); break;
    case ExperimentKind::engine_curves: run_engine(ctx); break;
    case ExperimentKind::verify: run_verify(ctx); break;
  }

  summary["ok"] = result.ok();
  result.summary = summary.dump(2);
  const auto path = ctx.dir / (cfg.name + "_summary.json");
  std::ofstream(path) << result.summary << "\n";
  result.files.push_back(path);
  return result;
}

// ---------------------------------------------------------------------------
// Verification suite

std::vector<Check> verification_suite(const VerifySettings& settings, std::uint64_t seed,
                                      unsigned threads) {
  std::vector<Check> checks;
  auto add = [&](std::string name, double value, double threshold) {
    checks.push_back({std::move(name), value, threshold, value <= threshold});
  };

  const double beta = 0.2;
  const double wi = 10.0;
  const double wf = 10.0 * std::numbers::sqrt3;
  const OscillatorParams params{};
  const auto fast = FrequencyProtocol::cosine_ramp(wi, wf, 1e-4);

  double wr = 0.0;
  for (double tau : {1e-4, 1e-2, 1.0}) {
    wr = std::max(wr, std::abs(basic_solutions(FrequencyProtocol::cosine_ramp(wi, wf, tau)).wronskian() - 1.0));
  }
  add("wronskian_drift", wr, kWronskianTolerance);

  std::vector<double> drift(settings.trajectories);
  parallel_for(settings.trajectories, threads, [&](std::size_t i) {
    const auto s0 = gibbs_sample(seed, i, beta, wi, params);
    const auto s1 = integrate(s0, fast, Drive::counterdiabatic, params);
    const double a0 = to_action_angle(s0, wi, params).action;
    const double a1 = to_action_angle(s1, wf, params).action;
    drift[i] = std::abs(a1 - a0) / a0;
  });
  add("control_on_action_drift", *std::max_element(drift.begin(), drift.end()), 1e-7);

  FockBasisConfig cfg;
  cfg.dimension = settings.dimension;
  cfg.omega_ref = wi;
  const std::size_t n_max = levels_for_tail(beta, wi, 1.0, 1e-12);
  const auto tm_on = transition_matrix(fast, Drive::counterdiabatic, cfg, n_max);
  double identity = 0.0;
  for (Eigen::Index n = 0; n < tm_on.probability.rows(); ++n) {
    for (Eigen::Index m = 0; m < tm_on.probability.cols(); ++m) {
      identity = std::max(identity, std::abs(tm_on.probability(n, m) - (n == m ? 1.0 : 0.0)));
    }
  }
  add("control_on_transition_identity", identity, 1e-6);

  const auto form = quadratic_form(basic_solutions(fast), beta, wi, wf);
  double qf = 0.0;
  for (std::size_t i = 0; i < settings.states; ++i) {
    const auto s0 = gibbs_sample(seed ^ 0x5eedULL, i, beta, wi, params);
    const double w = trajectory_work(s0, integrate(s0, fast, Drive::bare, params), fast, params);
    const double wq = quadratic_form_work(form, s0, beta, wi, params);
    qf = std::max(qf, std::abs(w - wq) / std::max(std::abs(w), bare_energy(s0, wi, params)));
  }
  add("quadratic_form_vs_trajectory_work", qf, 1e-6);

  const double inf = std::numeric_limits<double>::infinity();
  const double norm_ad = AnalyticCdf([&](double w) { return pdf_adiabatic(w, beta, wi, wf); })(inf);
  const double norm_nad = AnalyticCdf([&](double w) { return pdf_nonadiabatic(w, form); })(inf);
  const double norm_sl = AnalyticCdf([&](double w) { return pdf_sudden(w, beta, wi, wf); })(inf);
  const auto tm_off = transition_matrix(fast, Drive::bare, cfg, n_max);
  const double norm_q_on = quantum_work_atoms(tm_on, beta, wi, wf, 1.0).total_probability();
  const double norm_q_off = quantum_work_atoms(tm_off, beta, wi, wf, 1.0).total_probability();
  add("density_normalization",
      std::max({std::abs(norm_ad - 1.0), std::abs(norm_nad - 1.0), std::abs(norm_sl - 1.0),
                std::abs(norm_q_on - 1.0), std::abs(norm_q_off - 1.0)}),
      1e-6);

  double carnot = -inf;
  double closure = 0.0;
  const std::vector<StrokeKind> kinds{StrokeKind::sta(), StrokeKind::sudden(), StrokeKind::bare(0.05)};
  for (Regime regime : {Regime::classical, Regime::quantum}) {
    for (const auto& kind : kinds) {
      if (regime == Regime::quantum && kind.type == StrokeKind::Type::bare) continue;
      for (double ratio : {1.0, 1.5, 4.0, 25.0, 100.0}) {
        for (std::size_t k = 1; k <= settings.carnot_grid; ++k) {
          OttoCycleSpec spec;
          spec.beta_cold = 1.0;
          spec.beta_hot = 1.0 / ratio;
          spec.omega_i = 1.0;
          spec.omega_f = 1.0 + 20.0 * static_cast<double>(k) / static_cast<double>(settings.carnot_grid);
          spec.regime = regime;
          spec.compression = spec.expansion = kind;
          const auto r = evaluate_cycle(spec);
          if (r.feasible) carnot = std::max(carnot, r.efficiency - (1.0 - 1.0 / ratio));
          const double scale = r.energy_a + r.energy_b + r.energy_c + r.energy_d;
          closure = std::max(closure, std::abs(r.w_net - (r.q_hot + r.q_cold)) / scale);
        }
      }
    }
  }
  add("carnot_bound_excess", std::max(carnot, 0.0), 1e-12);
  add("cycle_energy_closure", closure, 1e-12);

  const EnsembleSpec det{beta, 2000, seed};
  const auto one = ensemble_work(det, fast, Drive::bare, params, EnsembleMethod::per_trajectory, 1);
  const auto many = ensemble_work(det, fast, Drive::bare, params, EnsembleMethod::per_trajectory, 4);
  double mismatch = 0.0;
  for (std::size_t i = 0; i < one.size(); ++i) mismatch = std::max(mismatch, std::abs(one[i] - many[i]));
  add("thread_count_independence", mismatch, 0.0);

  return checks;
}

}  // namespace stasim
