// Exercises the command line surface through the built binary: exit codes,
// record output, and the documented refusals.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "hma/image_io.hpp"

namespace {

namespace fs = std::filesystem;

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "hma_cli_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string command =
      std::string(HMA_CLI_PATH) + " " + args + " > /dev/null 2> /dev/null";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct Pipeline {
  std::string manifest;
  std::string model;
};

const Pipeline& pipeline() {
  static const Pipeline p = [] {
    Pipeline p;
    p.manifest = (work_dir() / "tiny.hma-manifest").string();
    p.model = (work_dir() / "tiny.hma-model").string();
    REQUIRE(run_cli("gen-synthetic --objects 3 --views 24 --feature-dim 12 --harmonics 2 "
                    "--noise-std 0.01 --heldout-every 4 --seed 5 -o " +
                    p.manifest) == 0);
    REQUIRE(run_cli("train " + p.manifest + " -o " + p.model + " --M 8") == 0);
    return p;
  }();
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli("") == 2);
  CHECK(run_cli("no-such-command") == 2);
  CHECK(run_cli("train") == 2);                       // missing arguments
  CHECK(run_cli("evaluate --output-format bogus") == 2);
}

TEST_CASE("data errors exit with 3") {
  CHECK(run_cli("train " + (work_dir() / "absent.hma-manifest").string() + " -o " +
                (work_dir() / "x.hma-model").string()) == 3);
  CHECK(run_cli("infer " + (work_dir() / "absent.hma-model").string() + " whatever.vec") == 3);
}

TEST_CASE("ill-posed training is refused") {
  const Pipeline& p = pipeline();
  // 3 objects x 18 training views; M beyond that is refused with a warning
  CHECK(run_cli("train " + p.manifest + " -o " + (work_dir() / "refused.hma-model").string() +
                " --M 40") == 3);
}

TEST_CASE("inference and evaluation run from the command line") {
  const Pipeline& p = pipeline();
  const fs::path query = work_dir() / "query.vec";
  {
    // first test record of the manifest as a bare feature file
    std::ifstream in(p.manifest);
    std::ofstream out(query);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find("\ttest") == std::string::npos) continue;
      const auto split_at = line.find("\ttest\t");
      std::string tail = line.substr(split_at + 6);
      for (char& c : tail) {
        if (c == '\t') c = ' ';
      }
      out << tail << "\n";
      break;
    }
  }
  CHECK(run_cli("infer " + p.model + " " + query.string() + " --oracle") == 0);
  CHECK(run_cli("infer " + p.model + " " + query.string() + " --seed 3") == 0);
  CHECK(run_cli("evaluate " + p.model + " " + p.manifest + " --oracle") == 0);

  // wrong feature length is a data error
  const fs::path bad = work_dir() / "bad.vec";
  std::ofstream(bad) << "1 2 3\n";
  CHECK(run_cli("infer " + p.model + " " + bad.string()) == 3);
}

TEST_CASE("synthesis needs raw intensity models and writes images") {
  const Pipeline& p = pipeline();
  // inline synthetic model is raw-kind but not image-shaped
  CHECK(run_cli("synthesize " + p.model + " -o " + (work_dir() / "v.pgm").string() +
                " --object obj-00 --yaw 10") != 0);

  // build an image-backed manifest from rendered bars
  const fs::path dir = work_dir() / "bars";
  fs::create_directories(dir);
  std::ofstream manifest(work_dir() / "bars.hma-manifest");
  manifest << "format_version: 1\nmanifold_case: 1D\nfeature.kind: raw\n"
              "feature.resize: 16x16\n\n";
  for (int i = 0; i < 12; ++i) {
    const double theta = 2.0 * 3.14159265358979 * i / 12;
    Eigen::MatrixXd image(16, 16);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        const double u = c - 7.5, v = r - 7.5;
        const double across = -u * std::sin(theta) + v * std::cos(theta);
        image(r, c) = 255.0 * std::exp(-across * across / 8.0);
      }
    }
    const std::string name = "bar" + std::to_string(i) + ".pgm";
    hma::write_pgm(dir / name, image);
    manifest << "bars/" << name << "\tbar\tshape\t" << 30.0 * i << "\t-\t-\ttrain\n";
  }
  manifest.close();
  const std::string bar_model = (work_dir() / "bars.hma-model").string();
  REQUIRE(run_cli("train " + (work_dir() / "bars.hma-manifest").string() + " -o " + bar_model +
                  " --M 12 --centers data --ridge 1e-10") == 0);
  const fs::path rendered = work_dir() / "rendered.png";
  CHECK(run_cli("synthesize " + bar_model + " -o " + rendered.string() +
                " --object bar --yaw 30 --reference " + (dir / "bar1.pgm").string()) == 0);
  CHECK(fs::exists(rendered));
  const Eigen::MatrixXd truth = hma::read_image(dir / "bar1.pgm");
  const Eigen::MatrixXd synth = hma::read_image(rendered);
  REQUIRE(synth.rows() == 16);
  CHECK((truth - synth).cwiseAbs().maxCoeff() <= 1.0);  // 8-bit quantization
}

TEST_CASE("cross-validate emits cells and a selection") {
  const Pipeline& p = pipeline();
  const fs::path out = work_dir() / "cv.txt";
  const std::string command = std::string(HMA_CLI_PATH) + " cross-validate " + p.manifest +
                              " --M-grid 6,8 --sampler oracle --output-format records > " +
                              out.string();
  REQUIRE(std::system(command.c_str()) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("cv.cell\tM=6") != std::string::npos);
  CHECK(text.find("cv.cell\tM=8") != std::string::npos);
  CHECK(text.find("cv.selected\tM=") != std::string::npos);
}

TEST_CASE("run records append to the log") {
  const Pipeline& p = pipeline();
  const fs::path log = work_dir() / "runs.log";
  fs::remove(log);
  REQUIRE(run_cli("evaluate " + p.model + " " + p.manifest + " --oracle --log " +
                  log.string()) == 0);
  REQUIRE(run_cli("evaluate " + p.model + " " + p.manifest + " --oracle --log " +
                  log.string()) == 0);
  const std::string text = slurp(log);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.find("run\tcommand=") != std::string::npos);
  CHECK(text.find("mae_degrees=") != std::string::npos);
}
