// gho_lab: spectra, scaling runs and constructive checks for generalized Harper operators.
//
// Exit codes: 0 pass (or report-only), 1 a check failed, 2 bad input, 3 computation error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "gho/gho.hpp"

using namespace gho;
using ojson = nlohmann::ordered_json;

namespace {

constexpr double pi = std::numbers::pi;

struct Common {
  std::string model_path;
  std::string out;
  std::string format = "json";
  unsigned jobs = default_jobs();
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string csv() const {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
    s += '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) s += ',';
        s += std::isnan(r[i]) ? std::string() : io::fmt(r[i]);
      }
      s += '\n';
    }
    return s;
  }
};

GHOModel load(const Common& c) { return c.model_path.empty() ? io::harper_model() : io::load_model(c.model_path); }

// Writes via a temporary file so that a failed run leaves nothing behind.
void write_file(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw InputError("write to '" + path.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

// --out PATH writes PATH.csv and PATH.json; otherwise --format picks what goes to stdout.
void emit(const Common& c, const Table& table, const ojson& report) {
  const std::string json_text = report.dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << (c.format == "csv" ? table.csv() : json_text);
    return;
  }
  std::filesystem::path stem(c.out);
  if (stem.extension() == ".csv" || stem.extension() == ".json") stem.replace_extension();
  write_file(std::filesystem::path(stem).concat(".csv"), table.csv());
  write_file(std::filesystem::path(stem).concat(".json"), json_text);
}

ojson fit_json(const FitResult& f) {
  return {{"exponent", f.exponent},
          {"constant", f.constant},
          {"residual", f.residual},
          {"points_used", f.points_used},
          {"points_excluded", f.points_excluded}};
}

ojson header(const std::string& command, const GHOModel& model) {
  return {{"command", command}, {"model", model.label}};
}

std::vector<double> default_deltas(int from, int to) {
  std::vector<double> d;
  for (int k = from; k <= to; ++k) d.push_back(std::ldexp(1.0, -k));
  return d;
}

void check_deltas(std::vector<double>& d) {
  if (d.empty()) throw InputError("no deltas given");
  for (double v : d)
    if (!(v > 0.0 && v <= 0.5)) throw InputError("deltas must lie in (0, 1/2], got " + io::fmt(v));
  std::sort(d.begin(), d.end(), std::greater<>());
  if (std::adjacent_find(d.begin(), d.end()) != d.end()) throw InputError("deltas must be distinct");
}

// Sweep method flags shared by the epsilon-scanning subcommands.
struct MethodFlags {
  std::string method = "bloch";
  std::int64_t N = 20;
  int m = 2;
  std::int64_t qmax = 5000;
  int margin = -1;
  double threshold = 0.5;
  bool reduced = true;

  void add(CLI::App* sub) {
    sub->add_option("--method", method, "bloch or truncation")->check(CLI::IsMember({"bloch", "truncation"}));
    sub->add_option("--N", N, "truncation box radius")->check(CLI::PositiveNumber);
    sub->add_option("--m", m, "k-points per direction (bloch)")->check(CLI::PositiveNumber);
    sub->add_option("--qmax", qmax, "denominator cap for the flux (bloch)")->check(CLI::PositiveNumber);
    sub->add_option("--margin", margin, "edge filter margin (truncation); negative disables the filter");
    sub->add_option("--threshold", threshold, "edge filter weight threshold");
  }
  SweepMethod get() const {
    if (method == "bloch") return BlochMethod{m, reduced ? BlochZone::reduced : BlochZone::magnetic, qmax};
    TruncationMethod t;
    t.N = N;
    t.max_dimension = std::size_t((2 * N + 1) * (2 * N + 1));
    if (margin >= 0) t.filter = EdgeFilter{margin, threshold};
    return t;
  }
  bool bloch() const { return method == "bloch"; }
};

std::vector<PlannedOffset> offsets(const GHOModel& model, const MethodFlags& mf, double eps0,
                                   const std::vector<double>& deltas, bool two_sided) {
  if (mf.bloch()) return plan_offsets(eps0, deltas, uniform_field_of(model), two_sided);
  return plain_offsets(eps0, deltas, two_sided);
}

// ---------------------------------------------------------------------------

int run_butterfly(const Common& c, double eps_min, double eps_max, int steps, MethodFlags mf) {
  const auto model = load(c);
  mf.reduced = false;
  std::vector<double> eps;
  for (int i = 0; i < steps; ++i)
    eps.push_back(steps == 1 ? eps_min : eps_min + (eps_max - eps_min) * double(i) / double(steps - 1));
  const auto spectra = spectral_sweep(model, eps, mf.get(), c.jobs);
  Table t{{"epsilon", "value"}, {}};
  for (std::size_t i = 0; i < eps.size(); ++i)
    for (double v : spectra[i].values) t.rows.push_back({eps[i], v});
  auto r = header("butterfly", model);
  r["method"] = describe(mf.get());
  r["epsilons"] = eps.size();
  r["rows"] = t.rows.size();
  r["pass"] = true;
  emit(c, t, r);
  return 0;
}

int run_hausdorff(const Common& c, double eps0, std::vector<double> deltas, const MethodFlags& mf, bool self_test) {
  if (self_test) {
    ScalingSeries s;
    for (double d : default_deltas(1, 12)) {
      s.deltas.push_back(d);
      s.observations.push_back(3.0 * std::sqrt(d));
    }
    const auto f = holder_fit(s);
    Table t{{"delta", "distance"}, {}};
    for (std::size_t i = 0; i < s.deltas.size(); ++i) t.rows.push_back({s.deltas[i], s.observations[i]});
    const bool pass = std::abs(f.exponent - 0.5) <= 1e-9;
    ojson r{{"command", "hausdorff"}, {"model", "self-test"}, {"fit", fit_json(f)}, {"pass", pass}};
    emit(c, t, r);
    return pass ? 0 : 1;
  }
  check_deltas(deltas);
  const auto model = load(c);
  const auto offs = offsets(model, mf, eps0, deltas, false);
  const auto s = hausdorff_series(make_oracle(model, mf.get()), eps0, offs, c.jobs);
  const auto f = holder_fit(s);
  Table t{{"delta", "distance"}, {}};
  for (std::size_t i = 0; i < s.deltas.size(); ++i) t.rows.push_back({s.deltas[i], s.observations[i]});
  auto r = header("hausdorff", model);
  r["method"] = describe(mf.get());
  r["eps0"] = eps0;
  r["nominal_deltas"] = s.nominal_deltas;
  r["fit"] = fit_json(f);
  r["pass"] = true;
  emit(c, t, r);
  return 0;
}

int run_gap_track(const Common& c, double eps0, std::vector<double> deltas, const MethodFlags& mf, double min_width,
                  double min_exponent) {
  check_deltas(deltas);
  const auto model = load(c);
  const auto oracle = make_oracle(model, mf.get());
  const auto gap = largest_gap(detect_gaps(oracle(eps0), min_width));
  if (!gap) throw std::runtime_error("no gap wider than " + io::fmt(min_width) + " at eps0");
  const auto track = gap_edge_track(oracle, *gap, offsets(model, mf, eps0, deltas, false), c.jobs);
  const auto f1 = holder_fit(edge_series(track, 1, eps0));
  const auto f2 = holder_fit(edge_series(track, 2, eps0));
  Table t{{"delta", "e1", "e2"}, {}};
  for (const auto& row : track.rows) t.rows.push_back({row.delta, row.e1_plus, row.e2_plus});
  auto r = header("gap-track", model);
  r["method"] = describe(mf.get());
  r["eps0"] = eps0;
  r["gap"] = {{"a", gap->a}, {"b", gap->b}, {"d", gap->d}};
  r["fit_e1"] = fit_json(f1);
  r["fit_e2"] = fit_json(f2);
  r["min_exponent"] = min_exponent;
  const bool pass = f1.exponent >= min_exponent && f2.exponent >= min_exponent;
  r["pass"] = pass;
  emit(c, t, r);
  return pass ? 0 : 1;
}

int run_midpoint(const Common& c, double eps0, std::vector<double> deltas, const MethodFlags& mf,
                 double min_exponent) {
  check_deltas(deltas);
  const auto model = load(c);
  const auto offs = offsets(model, mf, eps0, deltas, true);
  const auto e = sample_eplus(make_oracle(model, mf.get()), eps0, offs, c.jobs);
  const auto mid = midpoint_series(e, eps0, offs);
  const auto top = eplus_series(e, eps0, offs);
  Table t{{"delta", "defect", "eplus_shift"}, {}};
  for (std::size_t i = 0; i < mid.deltas.size(); ++i)
    t.rows.push_back({mid.deltas[i], mid.signed_observations[i], top.observations[i]});
  auto r = header("midpoint", model);
  r["method"] = describe(mf.get());
  r["eps0"] = eps0;
  r["eplus"] = e.center;
  r["fit_midpoint"] = fit_json(holder_fit(mid));
  r["fit_eplus"] = fit_json(holder_fit(top));
  r["min_exponent"] = min_exponent;
  const bool pass = r["fit_midpoint"]["exponent"].get<double>() >= min_exponent;
  r["pass"] = pass;
  emit(c, t, r);
  return pass ? 0 : 1;
}

int run_partition(const Common& c, const std::string& state_path, std::int64_t N, double beta, std::size_t pairs) {
  const auto phi = io::read_state(state_path);
  const auto cert = partition_function(phi, N, {.beta = beta, .lipschitz_pairs = pairs});
  Table t{{"x1", "x2"}, {}};
  for (const auto& a : cert.centers) t.rows.push_back({double(a.x1), double(a.x2)});
  const auto& k = cert.checks;
  ojson r{{"command", "partition-demo"},
          {"state", std::filesystem::path(state_path).filename().string()},
          {"N", N},
          {"centers", cert.centers.size()},
          {"min_center_distance", k.min_center_distance},
          {"min_center_distance_sup", k.min_center_distance_sup},
          {"min_support_distance", k.min_support_distance},
          {"exp_sum", k.exp_sum},
          {"exp_ratio", k.exp_ratio},
          {"lipschitz_max", k.lipschitz_max},
          {"mass_ratio", k.mass_ratio},
          {"distance_ok", cert.distance_ok()},
          {"rho_ok", cert.rho_ok()},
          {"mass_ok", cert.mass_ok()},
          {"lipschitz_ok", k.lipschitz_ok},
          {"pass", cert.pass()}};
  emit(c, t, r);
  return cert.pass() ? 0 : 1;
}

int run_certify(const Common& c, const std::string& samples_path, double alpha, double eta_max) {
  const auto s = io::read_samples(samples_path);
  const auto cert = certify(s, eta_max, alpha, {.jobs = c.jobs});
  Table t{{"eta", "max_ratio"}, {}};
  for (const auto& q : cert.ratios) t.rows.push_back({q.eta, q.max_ratio});
  ojson violations = ojson::array();
  for (const auto& v : cert.violations)
    violations.push_back({{"x", v.x}, {"y", v.y}, {"difference", v.difference}, {"bound", v.bound}});
  ojson r{{"command", "certify"},
          {"samples", std::filesystem::path(samples_path).filename().string()},
          {"alpha", alpha},
          {"eta_max", eta_max},
          {"P", cert.P},
          {"N", cert.Ndefect},
          {"pairs_checked", cert.pairs_checked},
          {"min_slack", cert.min_slack},
          {"violations", violations},
          {"pass", cert.valid()}};
  emit(c, t, r);
  return cert.valid() ? 0 : 1;
}

int run_decay(const Common& c, std::int64_t N, double eps, std::optional<double> z_opt, double depth,
              std::optional<double> force_mu) {
  const auto model = load(c);
  const BoxRegion box({0, 0}, N);
  AssemblyOptions ao;
  ao.max_dimension = box.size();
  const auto op = assemble(model, eps, box, ao);
  const double z = z_opt ? *z_opt : sup_spectrum(eigen_spectrum(op)) + depth;
  const auto rk = resolvent_kernel(op, z);
  const double beta = model.kernel.beta();
  const double b = tilted_b_estimate(model.kernel, beta / 2.0, box.center, box).b;
  const double mu_ok = admissible_mu(beta, rk.d, b);
  const double mu = force_mu ? *force_mu : mu_ok;
  const auto rep = decay_check(rk, mu);

  // |G| from the centre column, maximized per rounded distance
  Table t{{"distance", "abs_G", "bound"}, {}};
  std::map<long, double> profile;
  const auto j = Eigen::Index(box.index_of(box.center));
  for (std::size_t i = 0; i < box.size(); ++i) {
    const long r = std::lround(dist2(box.point_at(i), box.center));
    profile[r] = std::max(profile[r], std::abs(rk.G(Eigen::Index(i), j)));
  }
  for (const auto& [r, g] : profile) t.rows.push_back({double(r), g, 2.0 / rk.d * std::exp(-mu * double(r))});

  const bool report_only = force_mu.has_value() && *force_mu > mu_ok;
  auto r = header("decay-check", model);
  r["N"] = N;
  r["epsilon"] = eps;
  r["z"] = z;
  r["d"] = rk.d;
  r["b"] = b;
  r["admissible_mu"] = mu_ok;
  r["mu"] = mu;
  r["max_ratio"] = rep.max_ratio;
  r["interior_points"] = rep.interior_points;
  r["report_only"] = report_only;
  r["pass"] = rep.pass;
  emit(c, t, r);
  return rep.pass || report_only ? 0 : 1;
}

int run_parametrix(const Common& c, std::int64_t N, double eps, double z_re, double z_im) {
  const auto model = load(c);
  const BoxRegion box({0, 0}, N);
  AssemblyOptions ao;
  ao.max_dimension = box.size();
  const auto p = twisted_parametrix(model, eps, cplx(z_re, z_im), box, ao);
  const bool pass = p.residual <= 1e-10;
  Table t{{"epsilon", "residual", "column_sum", "d"}, {{eps, p.residual, p.column_sum, p.d}}};
  auto r = header("parametrix-check", model);
  r["N"] = N;
  r["epsilon"] = eps;
  r["z"] = {z_re, z_im};
  r["d"] = p.d;
  r["residual"] = p.residual;
  r["column_sum"] = p.column_sum;
  r["pass"] = pass;
  emit(c, t, r);
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectra and constructive checks for generalized Harper operators"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--model", common.model_path, "model JSON (default: Harper, t = 1, B = 1)")->check(CLI::ExistingFile);
  app.add_option("--out", common.out, "write PATH.csv and PATH.json");
  app.add_option("--format", common.format, "stdout format when --out is absent")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--jobs", common.jobs, "worker threads")->check(CLI::PositiveNumber);

  const std::string data = GHO_DATA_DIR;
  std::function<int()> action;

  double eps_min = 0.0, eps_max = 2.0 * pi;
  int steps = 64;
  MethodFlags bf_method;
  bf_method.m = 8;
  bf_method.qmax = 10;
  auto* bf = app.add_subcommand("butterfly", "spectrum against epsilon (epsilon,value rows)");
  bf->add_option("--eps-min", eps_min);
  bf->add_option("--eps-max", eps_max);
  bf->add_option("--steps", steps)->check(CLI::PositiveNumber);
  bf_method.add(bf);
  bf->callback([&] { action = [&] { return run_butterfly(common, eps_min, eps_max, steps, bf_method); }; });

  double eps0 = 2.0 * pi / 3.0;
  std::vector<double> deltas;
  MethodFlags hd_method;
  bool self_test = false;
  auto* hd = app.add_subcommand("hausdorff", "Hausdorff distance of spectra against delta, with a power-law fit");
  hd->add_option("--eps0", eps0);
  hd->add_option("--deltas", deltas, "offsets in (0, 1/2] (default 2^-4 .. 2^-10)");
  hd->add_flag("--self-test", self_test, "fit an exact square-root law instead");
  hd_method.add(hd);
  hd->callback([&] {
    if (deltas.empty()) deltas = default_deltas(4, 10);
    action = [&] { return run_hausdorff(common, eps0, deltas, hd_method, self_test); };
  });

  MethodFlags gt_method;
  double min_width = 0.05, gt_min_exp = 0.9;
  auto* gt = app.add_subcommand("gap-track", "edges of the widest gap against delta");
  gt->add_option("--eps0", eps0);
  gt->add_option("--deltas", deltas, "offsets (default 2^-5 .. 2^-10)");
  gt->add_option("--min-width", min_width, "smallest gap width considered at eps0");
  gt->add_option("--min-exponent", gt_min_exp, "pass threshold for both edge exponents");
  gt_method.add(gt);
  gt->callback([&] {
    if (deltas.empty()) deltas = default_deltas(5, 10);
    action = [&] { return run_gap_track(common, eps0, deltas, gt_method, min_width, gt_min_exp); };
  });

  MethodFlags md_method;
  double md_min_exp = 0.9;
  auto* md = app.add_subcommand("midpoint", "midpoint defect of the top of the spectrum");
  md->add_option("--eps0", eps0);
  md->add_option("--deltas", deltas, "offsets (default 2^-4 .. 2^-9)");
  md->add_option("--min-exponent", md_min_exp, "pass threshold for the defect exponent");
  md_method.add(md);
  md->callback([&] {
    if (deltas.empty()) deltas = default_deltas(4, 9);
    action = [&] { return run_midpoint(common, eps0, deltas, md_method, md_min_exp); };
  });

  std::string state_path = data + "/two_mass.csv";
  std::int64_t part_N = 3;
  double beta = 1.0;
  std::size_t pairs = 10000;
  auto* pd = app.add_subcommand("partition-demo", "greedy partition of unity for a state (x1,x2,re,im rows)");
  pd->add_option("--state", state_path)->check(CLI::ExistingFile);
  pd->add_option("--N", part_N)->check(CLI::PositiveNumber);
  pd->add_option("--beta", beta)->check(CLI::PositiveNumber);
  pd->add_option("--pairs", pairs, "random pairs for the Lipschitz probe");
  pd->callback([&] { action = [&] { return run_partition(common, state_path, part_N, beta, pairs); }; });

  std::string samples_path = data + "/sin_samples.csv";
  double alpha = 2.0, eta_max = 0.5;
  auto* ce = app.add_subcommand("certify", "modulus-of-continuity certificate for sampled data (x,F rows)");
  ce->add_option("--samples", samples_path)->check(CLI::ExistingFile);
  ce->add_option("--alpha", alpha)->check(CLI::PositiveNumber);
  ce->add_option("--eta-max", eta_max)->check(CLI::Range(0.0, 0.5));
  ce->callback([&] { action = [&] { return run_certify(common, samples_path, alpha, eta_max); }; });

  std::int64_t box_N = 25;
  double eps = 0.0, depth = 1.0, z_im = 0.0;
  std::optional<double> z, force_mu;
  auto* dc = app.add_subcommand("decay-check", "exponential decay of the resolvent kernel");
  dc->add_option("--N", box_N)->check(CLI::PositiveNumber);
  dc->add_option("--eps", eps);
  dc->add_option("--z", z, "real spectral parameter (default: top of spectrum + depth)");
  dc->add_option("--depth", depth, "distance above the spectrum when --z is absent")->check(CLI::PositiveNumber);
  dc->add_option("--force-mu", force_mu, "use this rate; above the admissible one the run is report-only")
      ->check(CLI::PositiveNumber);
  dc->callback([&] { action = [&] { return run_decay(common, box_N, eps, z, depth, force_mu); }; });

  std::int64_t par_N = 20;
  double par_eps = 0.1, z_re = 5.0;
  auto* pc = app.add_subcommand("parametrix-check", "residual of (h - z) S - 1 - eps T");
  pc->add_option("--N", par_N)->check(CLI::PositiveNumber);
  pc->add_option("--eps", par_eps);
  pc->add_option("--z", z_re, "real part of z");
  pc->add_option("--z-im", z_im, "imaginary part of z");
  pc->callback([&] { action = [&] { return run_parametrix(common, par_N, par_eps, z_re, z_im); }; });

  CLI11_PARSE(app, argc, argv);
  try {
    return action();
  } catch (const InputError& e) {
    std::cerr << "gho_lab: " << e.what() << "\n";
    return 2;
  } catch (const io::FormatError& e) {
    std::cerr << "gho_lab: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "gho_lab: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gho_lab: " << e.what() << "\n";
    return 3;
  }
}
