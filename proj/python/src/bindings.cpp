#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cstring>

#include "patchorder/bench.hpp"
#include "patchorder/filtering.hpp"
#include "patchorder/image.hpp"
#include "patchorder/ordering.hpp"
#include "patchorder/pipeline.hpp"

namespace py = pybind11;
using namespace patchorder;

namespace {

using Array2d = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const Array2d& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array (height, width)");
  Image img(static_cast<std::size_t>(a.shape(1)), static_cast<std::size_t>(a.shape(0)));
  std::memcpy(img.data.data(), a.data(), img.data.size() * sizeof(double));
  return img;
}

py::array_t<double> to_array(const Image& img) {
  py::array_t<double> out({img.height, img.width});
  std::memcpy(out.mutable_data(), img.data.data(), img.data.size() * sizeof(double));
  return out;
}

py::dict timings_dict(const PhaseTimings& t) {
  py::dict d;
  d["classify"] = t.classify;
  d["partition"] = t.partition;
  d["tsp_solve_wall"] = t.tsp_solve_wall;
  d["tsp_solve_sum"] = t.tsp_solve_sum;
  d["filter"] = t.filter;
  d["reconstruct"] = t.reconstruct;
  d["total"] = t.total;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Patch-ordering image denoiser";

  py::register_exception<FilterArityError>(m, "FilterArityError", PyExc_ValueError);
  py::register_exception<SingularSystemError>(m, "SingularSystemError", PyExc_RuntimeError);
  py::register_exception<ImageIoError>(m, "ImageIoError", PyExc_IOError);
  py::register_exception<MissingInputsError>(m, "MissingInputsError", PyExc_FileNotFoundError);

  m.attr("FILTER_TAPS") = kFilterTaps;
  m.attr("UNLIMITED_WINDOW") = kUnlimitedWindow;

  py::enum_<FilterMode>(m, "FilterMode")
      .value("per_class", FilterMode::per_class)
      .value("per_subset", FilterMode::per_subset);

  py::enum_<Scenario>(m, "Scenario")
      .value("original", Scenario::original)
      .value("prop20k", Scenario::prop20k)
      .value("prop10k", Scenario::prop10k);
  m.def("scenario_cap", &scenario_cap);

  py::class_<DenoiseConfig>(m, "DenoiseConfig")
      .def(py::init<>())
      .def_readwrite("sigma", &DenoiseConfig::sigma)
      .def_readwrite("patch_side", &DenoiseConfig::patch_side)
      .def_readwrite("tau", &DenoiseConfig::tau)
      .def_readwrite("K", &DenoiseConfig::K)
      .def_readwrite("cap", &DenoiseConfig::cap)
      .def_readwrite("branch", &DenoiseConfig::branch)
      .def_readwrite("window", &DenoiseConfig::window)
      .def_readwrite("filter_mode", &DenoiseConfig::filter_mode)
      .def_readwrite("seed", &DenoiseConfig::seed)
      .def_readwrite("threads", &DenoiseConfig::threads)
      .def("effective_patch_side", &DenoiseConfig::effective_patch_side)
      .def("validate", &DenoiseConfig::validate);
  m.def("parse_config", [](const std::string& text) { return parse_denoise_config(text); });

  py::class_<FilterBank>(m, "FilterBank")
      .def(py::init<>())
      .def(py::init([](FilterMode mode, const std::vector<std::vector<double>>& taps,
                       double sigma) {
             FilterBank bank;
             bank.mode = mode;
             bank.trained_sigma = sigma;
             for (const auto& row : taps) {
               if (row.size() != kFilterTaps) throw py::value_error("each filter needs 25 taps");
               Taps t{};
               std::copy(row.begin(), row.end(), t.begin());
               bank.taps.push_back(t);
             }
             return bank;
           }),
           py::arg("mode"), py::arg("taps"), py::arg("trained_sigma") = 0.0)
      .def_readwrite("mode", &FilterBank::mode)
      .def_readwrite("trained_sigma", &FilterBank::trained_sigma)
      .def_property_readonly("taps",
                             [](const FilterBank& b) {
                               py::array_t<double> out({b.taps.size(), kFilterTaps});
                               for (std::size_t i = 0; i < b.taps.size(); ++i) {
                                 std::copy(b.taps[i].begin(), b.taps[i].end(),
                                           out.mutable_data(i, 0));
                               }
                               return out;
                             })
      .def("__eq__", [](const FilterBank& a, const FilterBank& b) { return a == b; })
      .def("format", &format_filter_bank);
  m.def("delta_bank", &delta_bank, py::arg("mode") = FilterMode::per_class, py::arg("count") = 2);
  m.def("parse_filter_bank", &parse_filter_bank);
  m.def("save_filter_bank", &save_filter_bank);
  m.def("load_filter_bank", &load_filter_bank);

  m.def("load_image", [](const std::filesystem::path& p) { return to_array(load_image(p)); });
  m.def("save_image", [](const Array2d& a, const std::filesystem::path& p) {
    save_image(to_image(a), p);
  });
  m.def("add_gaussian_noise",
        [](const Array2d& a, double sigma, std::uint64_t seed) {
          return to_array(add_gaussian_noise(to_image(a), sigma, seed));
        },
        py::arg("image"), py::arg("sigma"), py::arg("seed"));
  m.def("psnr", [](const Array2d& a, const Array2d& b) { return psnr(to_image(a), to_image(b)); });

  m.def("convolve_same",
        [](const std::vector<double>& signal, const std::vector<double>& taps) {
          if (taps.size() != kFilterTaps) throw py::value_error("taps must have 25 entries");
          Taps t{};
          std::copy(taps.begin(), taps.end(), t.begin());
          return convolve_same(signal, t);
        });

  m.def(
      "build_tour",
      [](const Array2d& points, const py::array_t<std::uint32_t, py::array::c_style |
                                                                       py::array::forcecast>& locs,
         std::size_t branch, std::size_t window, std::size_t fallback_sample, std::uint64_t seed,
         std::optional<std::size_t> start) {
        if (points.ndim() != 2 || locs.ndim() != 2 || locs.shape(1) != 2 ||
            locs.shape(0) != points.shape(0)) {
          throw py::value_error("points must be (m, dim) and locations (m, 2)");
        }
        const auto m_pts = static_cast<std::size_t>(points.shape(0));
        const auto dim = static_cast<std::size_t>(points.shape(1));
        std::vector<PatchLocation> loc(m_pts);
        for (std::size_t i = 0; i < m_pts; ++i) loc[i] = {locs.at(i, 0), locs.at(i, 1)};
        std::span<const double> pts(points.data(), m_pts * dim);
        TourParams params{branch, window, fallback_sample};
        Tour tour;
        {
          py::gil_scoped_release release;
          tour = build_tour(pts, dim, loc, params, seed, start);
        }
        py::array_t<std::uint32_t> order(
            py::array::ShapeContainer{static_cast<py::ssize_t>(tour.order.size())});
        std::copy(tour.order.begin(), tour.order.end(), order.mutable_data());
        return py::make_tuple(order, tour.length_sum);
      },
      py::arg("points"), py::arg("locations"), py::arg("branch") = 2, py::arg("window") = 31,
      py::arg("fallback_sample") = 100, py::arg("seed") = 0, py::arg("start") = py::none(),
      "Randomized greedy tour; returns (order, summed edge length).");

  m.def(
      "denoise",
      [](const Array2d& noisy, const DenoiseConfig& config, const FilterBank& bank,
         std::optional<Array2d> clean) {
        const Image z = to_image(noisy);
        std::optional<Image> c;
        if (clean) c = to_image(*clean);
        DenoiseResult r;
        {
          py::gil_scoped_release release;
          r = denoise(z, config, bank, c ? &*c : nullptr);
        }
        py::dict out;
        out["image"] = to_array(r.output);
        out["psnr"] = r.psnr_vs_clean ? py::cast(*r.psnr_vs_clean) : py::none();
        out["W"] = r.W;
        out["X"] = r.X;
        out["tour_count"] = r.tour_count;
        out["timings"] = timings_dict(r.timings);
        return out;
      },
      py::arg("noisy"), py::arg("config"), py::arg("bank"), py::arg("clean") = py::none());

  m.def(
      "learn_filters",
      [](const std::vector<Array2d>& images, double sigma, const DenoiseConfig& config,
         double lambda, std::uint64_t seed) {
        std::vector<TrainingSample> samples;
        for (std::size_t i = 0; i < images.size(); ++i) {
          samples.push_back({to_image(images[i]), sigma, seed + i});
        }
        DenoiseConfig cfg = config;
        cfg.sigma = sigma;
        py::gil_scoped_release release;
        return learn_filters(samples, cfg, lambda);
      },
      py::arg("images"), py::arg("sigma"), py::arg("config"),
      py::arg("lambda_") = kDefaultRidgeLambda, py::arg("seed") = 1);

  m.def(
      "single_run",
      [](const Array2d& clean, const std::string& name, double sigma, Scenario scenario,
         std::uint64_t seed, const FilterBank& bank, const DenoiseConfig& base) {
        const Image img = to_image(clean);
        ExperimentRecord rec;
        {
          py::gil_scoped_release release;
          rec = single_run(img, name, sigma, scenario, seed, bank, base);
        }
        return format_csv({rec});
      },
      py::arg("clean"), py::arg("name"), py::arg("sigma"), py::arg("scenario"), py::arg("seed"),
      py::arg("bank"), py::arg("base") = DenoiseConfig{},
      "Runs one experiment and returns it as a one-row benchmark CSV.");
}
