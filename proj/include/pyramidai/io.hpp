#pragma once

#include <filesystem>
#include <iosfwd>

#include "pyramidai/geometry.hpp"
#include "pyramidai/prediction.hpp"

namespace pyramidai::io {

/// Binary PGM (P5, maxval 255), one byte per tile; nonzero means set.
void write_pgm(std::ostream& out, const Mask& mask);
void write_pgm(const std::filesystem::path& path, const Mask& mask);
Mask read_pgm(std::istream& in);
Mask read_pgm(const std::filesystem::path& path);

/// CSV with header `level,col,row,probability,label`.
void write_prediction_csv(std::ostream& out, const PredictionTable& table);
void write_prediction_csv(const std::filesystem::path& path, const PredictionTable& table);
PredictionTable read_prediction_csv(std::istream& in);
PredictionTable read_prediction_csv(const std::filesystem::path& path);

/// Opens a file for writing, creating parent directories; throws DataError.
std::ofstream open_output(const std::filesystem::path& path, bool binary = false);
std::ifstream open_input(const std::filesystem::path& path, bool binary = false);

}  // namespace pyramidai::io
