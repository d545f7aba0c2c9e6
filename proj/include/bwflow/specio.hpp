#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bwflow/flow.hpp"

namespace bwflow::io {

// JSON document (comments allowed):
//   {"dim": n, "omega": [[re, im], ...], "b": [[re, im], ...], "c0": x, "label": "..."}
// or {"blocks": [[omegaMinus, omegaPlus, b], ...], "c0": x, "label": "..."}.
// Matrices are row-major. Errors are ParseError naming the line or field.
QuadraticSpec parse_spec(const std::string& text);
QuadraticSpec read_spec_file(const std::string& path);

// Full matrix form, doubles written to round-trip exactly.
std::string write_spec(const QuadraticSpec& spec, const std::string& headerComment = {});

struct CsvRow {
  double t = 0.0;
  double hsB = 0.0;
  double c = 0.0;
  double minEigOmega = 0.0;
  double motionResidual = 0.0;
  double kNorm = 0.0;
};

inline constexpr const char* kCsvHeader = "t,hsB,c,minEigOmega,motionResidual,kNorm";

CsvRow csv_row(const flow::Sample& sample);
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_csv(std::istream& in);

}  // namespace bwflow::io
