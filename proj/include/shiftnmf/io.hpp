#pragma once

// File formats shared by the CLI and the tests:
//   matrices   CSV, first line "rows,cols", then one row per line
//   images     PGM, P2 (text) or P5 (binary), 8-bit
//   factors    archive directory: W.csv, W/comp_<j>.pgm, H.json,
//              history.csv, config.json
//   truth      truth.json written next to A.csv by `shiftnmf synth`

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "shiftnmf/dense_matrix.hpp"
#include "shiftnmf/shift_algebra.hpp"
#include "shiftnmf/solvers.hpp"
#include "shiftnmf/synth.hpp"

namespace shiftnmf::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_matrix_csv(const fs::path& path, const DenseMatrix& m);
DenseMatrix read_matrix_csv(const fs::path& path);

// Pixels in [0, 1] are quantized to round(255 x). Reading divides by maxval.
void write_pgm(const fs::path& path, const Frame& img, bool binary = false);
Frame read_pgm(const fs::path& path);

struct ImageStack {
  DenseMatrix A;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<fs::path> files;
};

// Every *.pgm in `dir`, sorted by file name, one column each.
ImageStack read_image_directory(const fs::path& dir);

struct HistoryRow {
  int stage = 1;
  std::size_t iteration = 0;
  double objective = 0.0;
};

std::vector<HistoryRow> history_rows(const SolveReport& report, int stage);

struct FactorArchive {
  std::string kind = "plain";  // "plain" or "two_stage"
  std::size_t frame_rows = 0;
  std::size_t frame_cols = 0;
  DenseMatrix W;
  GenShiftMatrix H;  // single-term entries for plain runs
  std::vector<HistoryRow> history;
  double final_objective = 0.0;
  std::size_t iterations_used = 0;
  std::string stop_reason;
  json config = json::object();  // run parameters echoed back
};

// Writes the archive; W images are scaled to peak 1 before quantization and
// the per-component scale is recorded in config.json ("image_scales").
void save_archive(const fs::path& dir, const FactorArchive& archive, bool binary_pgm = false);
FactorArchive load_archive(const fs::path& dir);

json h_to_json(const GenShiftMatrix& h, std::size_t frame_rows);
GenShiftMatrix h_from_json(const json& j);

void save_truth(const fs::path& path, const Dataset& ds);
Dataset load_truth(const fs::path& path);  // A left empty

}  // namespace shiftnmf::io
