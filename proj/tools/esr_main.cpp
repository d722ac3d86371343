// Command-line front end: synthesize data, train, predict, evaluate,
// and visualize. Exit codes: 0 ok, 1 usage, 2 bad data, 3 internal bug.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "esr/cascade.hpp"
#include "esr/dataset.hpp"
#include "esr/error.hpp"
#include "esr/eval.hpp"
#include "esr/landmark_io.hpp"
#include "esr/model_io.hpp"
#include "esr/pnm.hpp"
#include "esr/synth.hpp"
#include "esr/viz.hpp"

namespace {

std::vector<double> parse_csv_doubles(const std::string& text, std::size_t expect,
                                      const char* what) {
  std::vector<double> vals;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    try {
      vals.push_back(esr::detail::parse_double(text.substr(pos, comma - pos), what));
    } catch (const esr::DataError&) {
      throw esr::UsageError(std::string(what) + ": expected comma-separated numbers, got '" +
                            text + "'");
    }
    pos = comma + 1;
  }
  if (vals.size() != expect)
    throw esr::UsageError(std::string(what) + ": expected " + std::to_string(expect) +
                          " comma-separated numbers, got '" + text + "'");
  return vals;
}

esr::InitSet make_init_set(const std::string& init_data_dir, const esr::ESRModel& model) {
  esr::InitSet init;
  if (init_data_dir.empty()) {
    init.exemplars.push_back(model.mean_shape);
    return init;
  }
  esr::Dataset ds = esr::load_dataset(init_data_dir);
  init.exemplars = ds.shapes;
  return init;
}

struct SynthArgs {
  std::string out;
  std::size_t count = 0;
  std::size_t n_fp = 29;
  int size = 128;
  double noise = 2.0;
  std::uint64_t seed = 7;
};

struct TrainArgs {
  std::string data;
  std::string model;
  esr::TrainParams params;
};

struct PredictArgs {
  std::string model;
  std::string image;
  std::string out;
  std::string box_spec;
  std::string init_data;
  std::size_t n_init = 5;
  std::uint64_t seed = 7;
};

struct EvalArgs {
  std::string model;
  std::string data;
  std::string report;
  std::string init_data;
  std::string norm_pair = "0,1";
  bool no_norm = false;
  std::size_t n_init = 5;
  std::uint64_t seed = 7;
};

struct VizArgs {
  std::string image;
  std::string landmarks;
  std::string out;
  int radius = 2;
};

void run_synth(const SynthArgs& a) {
  const auto entries =
      esr::generate_synthetic_dataset(a.count, a.n_fp, a.size, a.noise, a.seed, a.out);
  std::printf("generated=%zu dir=%s n_fp=%zu size=%d noise=%g seed=%llu\n", entries.size(),
              a.out.c_str(), a.n_fp, a.size, a.noise,
              static_cast<unsigned long long>(a.seed));
}

void run_train(const TrainArgs& a) {
  const esr::Dataset ds = esr::load_dataset(a.data);
  const auto& p = a.params;
  std::printf(
      "config n_aug=%zu t_stages=%zu k_ferns=%zu p_pixels=%zu f_features=%zu kappa=%g "
      "beta=%g seed=%llu\n",
      p.n_aug, p.t_stages, p.k_ferns, p.p_pixels, p.f_features, p.kappa, p.beta,
      static_cast<unsigned long long>(p.seed));
  std::printf("data images=%zu n_fp=%zu\n", ds.size(),
              ds.size() ? ds.shapes[0].n_landmarks() : 0);
  std::fflush(stdout);

  std::vector<esr::LabeledImage> labeled;
  labeled.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    labeled.push_back({&ds.images[i], ds.shapes[i]});
  esr::InitSet init{ds.shapes};

  esr::TrainTrace trace;
  trace.on_init = [](double err) {
    std::printf("stage=0 train_error=%.9g\n", err);
    std::fflush(stdout);
  };
  trace.on_stage = [](std::size_t stage, double err) {
    std::printf("stage=%zu train_error=%.9g\n", stage + 1, err);
    std::fflush(stdout);
  };
  const esr::ESRModel model = esr::train(labeled, p, init, &trace);
  esr::save_model(model, a.model);
  std::printf("model=%s\n", a.model.c_str());
}

void run_predict(const PredictArgs& a) {
  const esr::ESRModel model = esr::load_model(a.model);
  const esr::Image img = esr::load_image(a.image);
  std::optional<esr::Box> box;
  if (!a.box_spec.empty()) {
    const auto v = parse_csv_doubles(a.box_spec, 4, "--box");
    box = esr::Box{v[0], v[1], v[2], v[3]};
  }
  const esr::InitSet init = make_init_set(a.init_data, model);
  esr::Rng rng(a.seed);
  const esr::Shape pred = esr::predict(model, img, esr::TestParams{a.n_init}, init, rng, box);
  esr::save_landmarks({pred, std::nullopt}, a.out);
  std::printf("landmarks=%s\n", a.out.c_str());
}

void run_eval(const EvalArgs& a) {
  const esr::ESRModel model = esr::load_model(a.model);
  const esr::Dataset ds = esr::load_dataset(a.data);
  const esr::InitSet init = make_init_set(a.init_data, model);
  esr::EvalOptions opts;
  if (a.no_norm) {
    opts.norm_pair.reset();
  } else {
    const auto v = parse_csv_doubles(a.norm_pair, 2, "--norm-pair");
    if (v[0] < 0 || v[1] < 0 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1]))
      throw esr::UsageError("--norm-pair: indices must be non-negative integers");
    opts.norm_pair = {std::size_t(v[0]), std::size_t(v[1])};
  }
  esr::Rng rng(a.seed);
  const esr::EvalReport report =
      esr::evaluate(model, ds, esr::TestParams{a.n_init}, init, rng, opts);
  esr::save_report(report, a.report);
  std::printf("images=%zu mean_error=%.9g median_error=%.9g report=%s\n",
              report.per_image_error.size(), report.mean_error, report.median_error,
              a.report.c_str());
}

void run_visualize(const VizArgs& a) {
  if (a.radius < 0) throw esr::UsageError("--radius must be >= 0");
  const esr::Image img = esr::load_image(a.image);
  const esr::LandmarkFile lf = esr::load_landmarks(a.landmarks);
  esr::save_image_ppm(esr::draw_landmarks(img, lf.shape, a.radius), a.out);
  std::printf("overlay=%s\n", a.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascaded fern regression for landmark-shape alignment"};
  app.require_subcommand(1);
  // Config values fill any flag left unset; --config must precede the subcommand.
  app.set_config("--config", "", "Read options from a key=value file (one [section] per subcommand)");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  synth->add_option("--out", sy.out, "Output directory")->required();
  synth->add_option("--count", sy.count, "Number of images")->required();
  synth->add_option("--n-fp", sy.n_fp, "Landmarks per shape")->capture_default_str();
  synth->add_option("--size", sy.size, "Image width and height")->capture_default_str();
  synth->add_option("--noise", sy.noise, "Gaussian pixel noise sigma")->capture_default_str();
  synth->add_option("--seed", sy.seed, "RNG seed")->capture_default_str();
  synth->callback([&] { run_synth(sy); });

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a model on an image directory");
  train->add_option("--data", tr.data, "Directory of .pgm images with .pts landmarks")
      ->required();
  train->add_option("--model", tr.model, "Output model file")->required();
  train->add_option("--stages", tr.params.t_stages, "Boosting stages")->capture_default_str();
  train->add_option("--ferns", tr.params.k_ferns, "Ferns per stage")->capture_default_str();
  train->add_option("--pixels", tr.params.p_pixels, "Pixel samples per stage")
      ->capture_default_str();
  train->add_option("--features", tr.params.f_features, "Features per fern")
      ->capture_default_str();
  train->add_option("--aug", tr.params.n_aug, "Initial shapes per training image")
      ->capture_default_str();
  train->add_option("--kappa", tr.params.kappa, "Local coordinate range")
      ->capture_default_str();
  train->add_option("--beta", tr.params.beta, "Bin shrinkage strength")->capture_default_str();
  train->add_option("--seed", tr.params.seed, "RNG seed")->capture_default_str();
  train->callback([&] { run_train(tr); });

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "Align landmarks on one image");
  predict->add_option("--model", pr.model, "Model file")->required();
  predict->add_option("--image", pr.image, "Input PGM image")->required();
  predict->add_option("--out", pr.out, "Output landmark file")->required();
  predict->add_option("--n-init", pr.n_init, "Initializations to combine")
      ->capture_default_str();
  predict->add_option("--seed", pr.seed, "RNG seed")->capture_default_str();
  predict->add_option("--box", pr.box_spec, "Query box X,Y,W,H (default: whole image)");
  predict->add_option("--init-data", pr.init_data,
                      "Directory whose shapes seed the initializations "
                      "(default: model mean shape)");
  predict->callback([&] { run_predict(pr); });

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a model on a labeled directory");
  eval->add_option("--model", ev.model, "Model file")->required();
  eval->add_option("--data", ev.data, "Labeled dataset directory")->required();
  eval->add_option("--report", ev.report, "Output report file")->required();
  eval->add_option("--n-init", ev.n_init, "Initializations to combine")
      ->capture_default_str();
  eval->add_option("--seed", ev.seed, "RNG seed")->capture_default_str();
  eval->add_option("--init-data", ev.init_data,
                   "Directory whose shapes seed the initializations");
  eval->add_option("--norm-pair", ev.norm_pair,
                   "Landmark index pair whose distance normalizes the error")
      ->capture_default_str();
  eval->add_flag("--no-norm", ev.no_norm, "Report unnormalized pixel errors");
  eval->callback([&] { run_eval(ev); });

  VizArgs vz;
  auto* viz = app.add_subcommand("visualize", "Render landmarks onto an image as a PPM");
  viz->add_option("--image", vz.image, "Input PGM image")->required();
  viz->add_option("--landmarks", vz.landmarks, "Landmark file to draw")->required();
  viz->add_option("--out", vz.out, "Output PPM file")->required();
  viz->add_option("--radius", vz.radius, "Disk radius in pixels")->capture_default_str();
  viz->callback([&] { run_visualize(vz); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const esr::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const esr::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
