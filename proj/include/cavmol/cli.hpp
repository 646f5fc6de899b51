#pragma once
// `cavmol` command-line front end. run() is callable in-process for tests.
//
// Exit codes: 0 ok, 1 internal error, 2 usage, 3 invalid input,
// 4 numerical failure, 5 I/O error, 6 invariant check failed.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cavmol/bound_states.hpp"
#include "cavmol/checks.hpp"
#include "cavmol/csv.hpp"
#include "cavmol/manifest.hpp"
#include "cavmol/resonance.hpp"
#include "cavmol/spectrum.hpp"

namespace cavmol::cli {

enum ExitCode : int {
  ok = 0,
  internal_error = 1,
  usage_error = 2,
  invalid_input = 3,
  numerical_failure = 4,
  io_error = 5,
  check_failed = 6,
};

/// Environment variable naming the default output directory.
inline constexpr const char* out_dir_env = "CAVMOL_OUT";

struct CommonOptions {
  std::string preset;
  std::string config_path;
  std::string out_dir;
  std::optional<unsigned> threads;
};

struct RangeOptions {
  std::optional<double> emin, emax;  // [MHz]
  std::optional<int> points;
};

/// Output directory, config and manifest bookkeeping for one subcommand.
class Session {
 public:
  Session(std::string subcommand, const CommonOptions& common, std::ostream& log)
      : log_(log), start_(std::chrono::steady_clock::now()) {
    manifest_.subcommand = std::move(subcommand);
    if (!common.preset.empty() && !common.config_path.empty())
      throw CLI::ValidationError("--preset and --config are mutually exclusive");
    std::optional<unsigned> run_threads;
    std::string run_out;
    if (!common.config_path.empty()) {
      std::ifstream in(common.config_path);
      if (!in) throw IoError("cannot open config '" + common.config_path + "'");
      nlohmann::json j;
      try {
        in >> j;
        config_ = load_config(j);
        // Optional "run" section: defaults that command-line flags override.
        const auto run = j.value("run", nlohmann::json::object());
        if (run.contains("threads")) run_threads = run.at("threads").get<unsigned>();
        if (run.contains("out_dir")) run_out = run.at("out_dir").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config", e.what());
      }
    } else {
      config_ = presets::by_name(common.preset.empty() ? "cs-optical" : common.preset);
    }
    manifest_.preset = config_.preset;
    manifest_.config_hash = config_hash(config_);
    std::string dir = common.out_dir.empty() ? run_out : common.out_dir;
    if (dir.empty()) {
      const char* env = std::getenv(out_dir_env);
      dir = env && *env ? env : "out";
    }
    out_dir_ = dir;
    std::error_code ec;
    std::filesystem::create_directories(out_dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    threads_ = std::max(1u, common.threads.value_or(run_threads.value_or(default_threads())));
  }

  const Config& config() const { return config_; }
  unsigned threads() const { return threads_; }
  std::ostream& log() { return log_; }
  void override_value(const std::string& key, nlohmann::json value) {
    manifest_.overrides[key] = std::move(value);
  }

  void write(const Table& t, const std::string& name) {
    const auto path = out_dir_ / name;
    emit_csv(t, path);
    manifest_.outputs.push_back(path.string());
    log_ << "wrote " << path.string() << " (" << t.size() << " rows)\n";
  }

  void write_json(const nlohmann::json& j, const std::string& name) {
    const auto path = out_dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
    manifest_.outputs.push_back(path.string());
    log_ << "wrote " << path.string() << '\n';
  }

  void finish() {
    manifest_.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const auto path = out_dir_ / ("manifest_" + manifest_.subcommand + ".json");
    write_manifest(manifest_, path);
  }

 private:
  std::ostream& log_;
  Config config_;
  std::filesystem::path out_dir_;
  unsigned threads_ = 1;
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

namespace detail {

inline CouplingTables scattering_tables(const Config& c) {
  return build_couplings(diagonalize_curves(c.params, RadialGrid::from_spec(c.grid)));
}

/// Default energy window: from the well bottom to just below the omega_2
/// threshold (the threshold itself is excluded, channel 2 opens there).
inline std::pair<double, double> energy_window(Session& s, const CouplingTables& t,
                                               const RangeOptions& r) {
  const auto well = well_for(s.config().params, s.config().grid);
  double lo = t.thresholds[0], hi = t.thresholds[1];
  if (well) {
    lo = well->min_value;
    hi = t.thresholds[1] - 1e-3 * well->depth;
  }
  if (r.emin) {
    lo = units::from_mhz(*r.emin);
    s.override_value("emin_MHz", *r.emin);
  }
  if (r.emax) {
    hi = units::from_mhz(*r.emax);
    s.override_value("emax_MHz", *r.emax);
  }
  if (!(hi > lo)) throw ValidationError("energy", "empty range (emax must exceed emin)");
  return {lo, hi};
}

inline int points_or(Session& s, const RangeOptions& r, int fallback) {
  if (!r.points) return fallback;
  if (*r.points < 2) throw ValidationError("points", "must be >= 2");
  s.override_value("points", *r.points);
  return *r.points;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_potentials(Session& s, const RangeOptions& r, bool dump_couplings) {
  const auto& c = s.config();
  const int n = detail::points_or(s, r, 4001);
  const auto curves =
      diagonalize_curves(c.params, RadialGrid::uniform(c.grid.r_wall, c.grid.r_infinity, n));
  if (dump_couplings) {
    s.override_value("dump_couplings", true);
    const auto tables = build_couplings(curves);
    Table d({"R_a0", "tau12_per_a0", "tau13_per_a0", "tau23_per_a0", "T11", "T12", "T13", "T21",
             "T22", "T23", "T31", "T32", "T33"});
    for (std::size_t k = 0; k < curves.size(); ++k) {
      const auto& tau = tables.tau[k];
      const auto& tm = tables.T[k];
      d.add_row({curves.r(k), tau(0, 1), tau(0, 2), tau(1, 2), tm(0, 0), tm(0, 1), tm(0, 2),
                 tm(1, 0), tm(1, 1), tm(1, 2), tm(2, 0), tm(2, 1), tm(2, 2)});
    }
    s.write(d, "couplings.csv");
  }
  Table t({"R_a0", "omega1_MHz", "omega2_MHz", "omega3_MHz"});
  for (std::size_t k = 0; k < curves.size(); ++k)
    t.add_row({curves.r(k), units::to_mhz(curves.omega[k][0]), units::to_mhz(curves.omega[k][1]),
               units::to_mhz(curves.omega[k][2])});
  s.write(t, "potentials.csv");
  return ok;
}

inline int cmd_sweep_kappa(Session& s, const RangeOptions& r) {
  const auto& c = s.config();
  const int n = detail::points_or(s, r, 21);
  std::vector<double> kappas;
  for (int i = 0; i < n; ++i) kappas.push_back(c.params.kappa_A * std::pow(100.0, double(i) / (n - 1)));
  Table t({"kappa_A_MHz", "depth_MHz", "r_c_a0"});
  for (const auto& row : sweep_coupling(c.params, c.grid, kappas))
    t.add_row({units::to_mhz(row.kappa_A), units::to_mhz(row.depth), row.r_c});
  s.write(t, "sweep_kappa.csv");
  return ok;
}

inline int cmd_sweep_detuning(Session& s, const RangeOptions& r, std::optional<double> dmin,
                              std::optional<double> dmax) {
  const auto& c = s.config();
  const int n = detail::points_or(s, r, 41);
  const double span = 20.0 * std::max(std::abs(c.params.detuning_c()), units::from_khz(1.0));
  double lo = dmin ? units::from_mhz(*dmin) : -span, hi = dmax ? units::from_mhz(*dmax) : span;
  if (dmin) s.override_value("dmin_MHz", *dmin);
  if (dmax) s.override_value("dmax_MHz", *dmax);
  if (!(hi > lo)) throw ValidationError("detuning", "empty range (dmax must exceed dmin)");
  Table t({"detuning_MHz", "omega2_min_MHz", "r_c_a0"});
  for (const auto& row : sweep_detuning(c.params, c.grid, linspace(lo, hi, n)))
    t.add_row({units::to_mhz(row.detuning), units::to_mhz(row.min_value), row.r_c});
  s.write(t, "sweep_detuning.csv");
  return ok;
}

inline int cmd_scatter(Session& s, const RangeOptions& r, std::optional<double> loss) {
  const auto tables = detail::scattering_tables(s.config());
  const auto [lo, hi] = detail::energy_window(s, tables, r);
  const int n = detail::points_or(s, r, 2001);
  const double gamma_c = loss ? units::from_mhz(*loss) : s.config().params.gamma_c;
  if (loss) s.override_value("loss_MHz", *loss);
  const auto energies = linspace(lo, hi, n);
  const auto pts = scan_energies(tables, energies, {}, s.threads());
  std::vector<double> sigma;
  for (const auto& p : pts) sigma.push_back(p.sigma11);
  const auto lossy = lossy_convolve(energies, sigma, gamma_c);
  Table t({"E_MHz", "P1_1e-22_g_cm_s", "sigma11_cm2", "abs_S11", "re_S11", "im_S11",
           "sigma11_lossy_cm2"});
  for (std::size_t i = 0; i < pts.size(); ++i)
    t.add_row({units::to_mhz(pts[i].E), units::momentum_to_1e22_gcms(pts[i].P1), pts[i].sigma11,
               std::abs(pts[i].S11), pts[i].S11.real(), pts[i].S11.imag(), lossy[i]});
  s.write(t, "scatter.csv");
  return ok;
}

inline int cmd_resonances(Session& s, const RangeOptions& r, bool poles) {
  const auto tables = detail::scattering_tables(s.config());
  const auto [lo, hi] = detail::energy_window(s, tables, r);
  AdaptiveScanOptions aopt;
  aopt.coarse_points = detail::points_or(s, r, 2001);
  const auto pts = adaptive_scan(tables, lo, hi, aopt, {}, s.threads());
  std::vector<double> e, sigma;
  Table scan({"E_MHz", "sigma11_cm2", "re_S11", "im_S11"});
  for (const auto& p : pts) {
    e.push_back(p.E);
    sigma.push_back(p.sigma11);
    scan.add_row({units::to_mhz(p.E), p.sigma11, p.S11.real(), p.S11.imag()});
  }
  s.write(scan, "resonance_scan.csv");
  const auto fitted = scan_and_fit(e, sigma);
  std::vector<Resonance> seeds;
  for (const auto& f : fitted)
    if (f.kind == ResonanceKind::peak_fit) seeds.push_back(f);
  std::vector<Resonance> refined;
  if (poles) refined = find_poles(tables, seeds, {}, s.threads());
  Table t({"E_r_MHz", "Gamma_R_MHz", "kind", "prominence_cm2", "pole_E_MHz", "pole_Gamma_MHz"});
  auto list = nlohmann::json::array();
  std::size_t j = 0;
  for (const auto& f : fitted) {
    std::string pe, pg;
    nlohmann::json entry = {{"e_r_MHz", units::to_mhz(f.e_r)},
                            {"gamma_r_MHz", units::to_mhz(f.gamma_r)},
                            {"kind", to_string(f.kind)}};
    if (f.kind == ResonanceKind::peak_fit && poles) {
      const auto& p = refined[j++];
      if (p.kind == ResonanceKind::complex_pole) {
        pe = format_number(units::to_mhz(p.e_r));
        pg = format_number(units::to_mhz(p.gamma_r));
        entry["pole"] = {{"e_r_MHz", units::to_mhz(p.e_r)},
                         {"gamma_r_MHz", units::to_mhz(p.gamma_r)},
                         {"kind", to_string(p.kind)}};
      }
    }
    list.push_back(std::move(entry));
    t.add_row({units::to_mhz(f.e_r), units::to_mhz(f.gamma_r), std::string(to_string(f.kind)),
               f.prominence, pe, pg});
  }
  s.write(t, "resonances.csv");
  s.write_json(list, "resonances.json");
  return ok;
}

inline int cmd_levels(Session& s, Symmetry sym, int n_theta) {
  LevelsOptions opt;
  opt.n_theta = n_theta;
  s.override_value("symmetry", to_string(sym));
  s.override_value("n_theta", n_theta);
  const auto levels = levels_vs_theta(s.config(), sym, opt, s.threads());
  Table t({"theta_rad", "v", "e_v_MHz", "shift_MHz", "width_MHz"});
  for (const auto& l : levels)
    t.add_row({l.theta, l.v, units::to_mhz(l.e_v), units::to_mhz(l.lzs_shift),
               units::to_mhz(l.lzs_width)});
  s.write(t, std::string("levels_") + to_string(sym) + ".csv");
  return ok;
}

inline int cmd_spectrum(Session& s, const RangeOptions& r, double gamma_eff_mhz, int n_theta) {
  SpectrumOptions opt;
  opt.gamma_eff = units::from_mhz(gamma_eff_mhz);
  opt.n_theta = n_theta;
  s.override_value("gamma_eff_MHz", gamma_eff_mhz);
  s.override_value("n_theta", n_theta);
  if (r.emin || r.emax) {
    if (!r.emin || !r.emax) throw ValidationError("omega", "give both --emin and --emax");
    opt.omega_min = units::from_mhz(*r.emin);
    opt.omega_max = units::from_mhz(*r.emax);
    if (!(opt.omega_max > opt.omega_min))
      throw ValidationError("omega", "empty range (emax must exceed emin)");
    s.override_value("emin_MHz", *r.emin);
    s.override_value("emax_MHz", *r.emax);
  }
  opt.points = detail::points_or(s, r, opt.points);
  const auto res =
      emission_spectra(s.config(), {Symmetry::sigma, Symmetry::pi}, opt, s.threads());
  for (const auto& x : res)
    if (x.empty) s.log() << "warning: no bound levels, " << to_string(x.symmetry) << " spectrum is zero\n";
  Table t({"omega_MHz_rel", "I_sigma", "I_pi"});
  for (std::size_t j = 0; j < res[0].omega.size(); ++j)
    t.add_row({units::to_mhz(res[0].omega[j]), res[0].intensity[j], res[1].intensity[j]});
  s.write(t, "spectrum.csv");
  return ok;
}

inline int cmd_validate(Session& s, int n_energies) {
  const auto& c = s.config();
  auto checks = analytic_limit_checks(c.params);
  const auto curves = diagonalize_curves(c.params, RadialGrid::from_spec(c.grid));
  const auto tables = build_couplings(curves);
  checks.push_back({"T orthogonality", orthogonality_defect(tables.T), 1e-10});
  RangeOptions none;
  const auto [lo, hi] = detail::energy_window(s, tables, none);
  const auto v = scattering_checks(tables, linspace(lo, hi, n_energies), {}, s.threads());
  checks.push_back({"S unitarity (open block)", v.unitarity, 1e-6});
  checks.push_back({"K symmetry (relative)", v.k_symmetry, 1e-6});
  checks.push_back({"K reality (relative)", v.k_imaginary, 1e-6});
  checks.push_back({"sigma11 s-wave unitarity bound (relative excess)", v.unitarity_bound, 1e-6});
  Table t({"check", "value", "tolerance", "passed"});
  bool all = true;
  for (const auto& ch : checks) {
    all = all && ch.passed();
    s.log() << (ch.passed() ? "PASS " : "FAIL ") << ch.name << ": " << ch.value
            << " (tol " << ch.tolerance << ")\n";
    std::string name = ch.name;
    for (auto& ch2 : name)
      if (ch2 == ',') ch2 = ';';
    t.add_row({name, ch.value, ch.tolerance, ch.passed() ? 1 : 0});
  }
  s.write(t, "validate.csv");
  return all ? ok : check_failed;
}

// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Two cold atoms exchanging a photon with a cavity mode"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version);

  CommonOptions common;
  RangeOptions range;
  std::optional<double> loss, dmin, dmax;
  double gamma_eff = 8.0;
  int n_theta = 65;
  int n_energies = 21;
  std::string symmetry = "sigma";
  bool no_poles = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--preset", common.preset, "cs-optical | cs-rydberg");
    sub->add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", common.out_dir,
                    std::string("output directory (default $") + out_dir_env + " or ./out)");
    sub->add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
  };
  auto add_range = [&](CLI::App* sub) {
    sub->add_option("--emin", range.emin, "lower energy [MHz, relative to omega_A]");
    sub->add_option("--emax", range.emax, "upper energy [MHz, relative to omega_A]");
  };
  auto add_points = [&](CLI::App* sub) { sub->add_option("--points", range.points, "sample count"); };

  auto* potentials = app.add_subcommand("potentials", "adiabatic curves omega_1..3(R)");
  add_common(potentials);
  add_points(potentials);
  bool dump_couplings = false;
  potentials->add_flag("--dump-couplings", dump_couplings, "also write tau_ij(R) and T(R) to couplings.csv");
  auto* sweep_k = app.add_subcommand("sweep-kappa", "well depth and R_c for kappa_A x1..x100");
  add_common(sweep_k);
  add_points(sweep_k);
  auto* sweep_d = app.add_subcommand("sweep-detuning", "well minimum versus cavity detuning");
  add_common(sweep_d);
  add_points(sweep_d);
  sweep_d->add_option("--dmin", dmin, "lowest detuning [MHz]");
  sweep_d->add_option("--dmax", dmax, "highest detuning [MHz]");
  auto* scatter = app.add_subcommand("scatter", "sigma_11 and S_11 on a uniform energy grid");
  add_common(scatter);
  add_range(scatter);
  add_points(scatter);
  scatter->add_option("--loss", loss, "cavity linewidth Gamma_c for the lossy column [MHz]")
      ->check(CLI::NonNegativeNumber);
  auto* resonances = app.add_subcommand("resonances", "adaptive scan, Lorentzian fits, poles");
  add_common(resonances);
  add_range(resonances);
  add_points(resonances);
  std::vector<double> window;
  resonances->add_option("--window", window, "energy window EMIN EMAX [MHz], same as --emin/--emax")
      ->expected(2)
      ->excludes("--emin")
      ->excludes("--emax");
  resonances->add_flag("--no-poles", no_poles, "skip the complex pole search");
  auto* levels = app.add_subcommand("levels", "Morse + LZS vibrational levels versus theta");
  add_common(levels);
  levels->add_option("--symmetry", symmetry, "sigma | pi");
  levels->add_option("--n-theta", n_theta, "theta grid points")->check(CLI::Range(8, 100000));
  auto* spectrum = app.add_subcommand("spectrum", "Franck-Condon emission spectrum, Sigma and Pi");
  add_common(spectrum);
  add_range(spectrum);
  add_points(spectrum);
  spectrum->add_option("--gamma-eff", gamma_eff, "Lorentzian HWHM [MHz]")->check(CLI::PositiveNumber);
  spectrum->add_option("--n-theta", n_theta, "theta grid points")->check(CLI::Range(8, 100000));
  auto* validate = app.add_subcommand("validate", "run the invariant suite");
  add_common(validate);
  validate->add_option("--energies", n_energies, "energies for the scattering checks")
      ->check(CLI::Range(2, 100000));

  std::vector<std::string> argv_store{"cavmol"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return usage_error;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    Session session(sub->get_name(), common, err);
    int code = ok;
    if (sub == potentials) code = cmd_potentials(session, range, dump_couplings);
    else if (sub == sweep_k) code = cmd_sweep_kappa(session, range);
    else if (sub == sweep_d) code = cmd_sweep_detuning(session, range, dmin, dmax);
    else if (sub == scatter) code = cmd_scatter(session, range, loss);
    else if (sub == resonances) {
      if (window.size() == 2) {
        range.emin = window[0];
        range.emax = window[1];
      }
      code = cmd_resonances(session, range, !no_poles);
    }
    else if (sub == levels) code = cmd_levels(session, parse_symmetry(symmetry), n_theta);
    else if (sub == spectrum) code = cmd_spectrum(session, range, gamma_eff, n_theta);
    else if (sub == validate) code = cmd_validate(session, n_energies);
    session.finish();
    return code;
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return usage_error;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return invalid_input;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return invalid_input;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  } catch (const CalibrationError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return io_error;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return internal_error;
  }
}

}  // namespace cavmol::cli
