#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skewstab/config.hpp"
#include "skewstab/experiment.hpp"

namespace py = pybind11;
using namespace skewstab;

namespace {

AtomicSignedMeasure to_measure(const std::vector<std::pair<double, double>>& atoms) {
  std::vector<Atom> v;
  v.reserve(atoms.size());
  for (const auto& [x, w] : atoms) v.push_back({x, w});
  return AtomicSignedMeasure::from_unsorted(std::move(v));
}

py::dict report_dict(const RunReport& r) {
  py::module_ json = py::module_::import("json");
  py::dict out = json.attr("loads")(r.to_json().dump());
  py::dict tables;
  for (const auto& t : r.tables) tables[py::str(t.name)] = t.csv();
  out["csv"] = tables;
  out["wall_clock"] = r.wall_clock;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stability experiments for skew products over subshifts";
  m.attr("__version__") = SKEWSTAB_VERSION;

  // later registrations are tried first, so the subclass goes last
  const auto base = py::register_exception<Error>(m, "SkewstabError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);

  m.def("subcommands", [] { return subcommands(); });

  m.def(
      "run",
      [](const std::string& subcommand, const std::string& config, std::optional<std::uint64_t> seed, unsigned threads,
         std::optional<std::string> out) {
        const auto cfg = parse_config(config);
        RunOptions opts;
        opts.seed = seed;
        opts.threads = threads;
        RunReport report;
        {
          py::gil_scoped_release release;
          report = run_experiment(subcommand, cfg, opts);
          if (out) write_report(report, *out);
        }
        return report_dict(report);
      },
      py::arg("subcommand"), py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = 1,
      py::arg("out") = py::none(), "Run one experiment on a JSON config file and return the report as a dict.");

  m.def(
      "config_digest", [](const std::string& path) { return parse_config(path).digest; }, py::arg("path"));

  m.def(
      "wk_distance",
      [](const std::vector<std::pair<double, double>>& a, const std::vector<std::pair<double, double>>& b) {
        return wk_distance(to_measure(a), to_measure(b));
      },
      py::arg("a"), py::arg("b"), "Bounded-Lipschitz distance between two atomic measures given as (position, weight).");

  m.def(
      "fixed_point_summary",
      [](const std::string& config, unsigned threads) {
        const auto cfg = parse_config(config);
        const auto fp = fixed_point(cfg.sys(), cfg.depth, cfg.tolerance, cfg.grid, FixedPointStart::DiracHalf, threads);
        py::dict d;
        d["iterations"] = fp.iterations;
        d["certified_error"] = fp.certified_error;
        d["norm_inf"] = norm_inf(fp.measure);
        d["norm_s_inf"] = norm_s_inf(fp.measure, cfg.sys().theta());
        d["lip"] = lip_constant(fp.measure, cfg.sys().theta(), threads).value;
        d["words"] = fp.measure.size();
        return d;
      },
      py::arg("config"), py::arg("threads") = 1);
}
