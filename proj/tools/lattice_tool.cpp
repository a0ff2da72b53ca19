// lattice synth --out frame.pgm [--atoms x1,y1[,x2,y2]] [--seed S] [--no-noise]
// lattice fit <frame.pgm> [--atoms 1|2] [--out centroids.csv]

#include "cqed/image_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <vector>

namespace lat = cqed::lattice;

int main(int argc, char** argv) {
  CLI::App app{"Synthetic fluorescence frames and PSF centroid fits"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Render atoms into a 16-bit PGM with a sidecar");
  std::string synth_out;
  std::vector<double> coords{7.2, 7.0};
  lat::SynthSettings settings;
  bool no_noise = false;
  synth->add_option("--out", synth_out, "Output PGM path")->required();
  synth->add_option("--atoms", coords, "Camera positions in um: x1,y1[,x2,y2]")->delimiter(',');
  synth->add_option("--seed", settings.seed, "Noise seed");
  synth->add_option("--size", settings.width, "Frame width and height in pixels");
  synth->add_option("--amplitude", settings.amplitude, "Integrated counts per atom");
  synth->add_option("--background", settings.background, "Background counts per pixel");
  synth->add_flag("--no-noise", no_noise, "Disable Poisson shot noise");

  auto* fit = app.add_subcommand("fit", "Fit one or two PSFs and write centroids as CSV");
  std::string fit_in, fit_out;
  int n_atoms = 2;
  fit->add_option("image", fit_in, "Input PGM")->required();
  fit->add_option("--atoms", n_atoms, "Number of atoms in the frame")->check(CLI::Range(1, 2));
  fit->add_option("--out", fit_out, "CSV output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto geom = lat::reference_geometry();
    if (*synth) {
      if (coords.size() != 2 && coords.size() != 4) throw std::invalid_argument("--atoms takes 2 or 4 numbers");
      std::vector<lat::Point> pts;
      for (std::size_t k = 0; k < coords.size(); k += 2) pts.push_back({coords[k], coords[k + 1]});
      settings.height = settings.width;
      settings.shot_noise = !no_noise;
      lat::write_pgm16(synth_out, lat::synth_image(pts, geom, settings));
    } else {
      const auto img = lat::read_pgm16(fit_in);
      const auto fits = lat::fit_psf(img, n_atoms);
      if (fit_out.empty()) {
        lat::write_centroids_csv(std::cout, fits, img.pixel_scale);
      } else {
        std::ofstream out(fit_out);
        if (!out) throw lat::ImageIoError("cannot write " + fit_out);
        lat::write_centroids_csv(out, fits, img.pixel_scale);
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
