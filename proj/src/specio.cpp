#include "bwflow/specio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bwflow/analytic.hpp"

namespace bwflow::io {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

double number(const json& value, const std::string& field) {
  if (!value.is_number()) fail("field '" + field + "': expected a number");
  return value.get<double>();
}

Matrix read_matrix(const json& doc, const std::string& field, Eigen::Index dim) {
  if (!doc.contains(field)) fail("missing field '" + field + "'");
  const json& entries = doc.at(field);
  if (!entries.is_array()) fail("field '" + field + "': expected a list of [re, im] pairs");
  if (static_cast<Eigen::Index>(entries.size()) != dim * dim) {
    std::ostringstream msg;
    msg << "field '" << field << "': expected " << dim * dim << " entries, got " << entries.size();
    fail(msg.str());
  }
  Matrix m(dim, dim);
  for (Eigen::Index k = 0; k < dim * dim; ++k) {
    const json& pair = entries[static_cast<std::size_t>(k)];
    std::string where = field + "[" + std::to_string(k) + "]";
    if (!pair.is_array() || pair.size() != 2) fail("field '" + where + "': expected [re, im]");
    m(k / dim, k % dim) = Complex(number(pair[0], where + "[0]"), number(pair[1], where + "[1]"));
  }
  return m;
}

json write_matrix(const Matrix& m) {
  json entries = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) entries.push_back({m(i, j).real(), m(i, j).imag()});
  return entries;
}

}  // namespace

QuadraticSpec parse_spec(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    std::ostringstream msg;
    msg << "line " << line_of(text, e.byte) << ": " << e.what();
    fail(msg.str());
  }
  if (!doc.is_object()) fail("top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "dim" && key != "omega" && key != "b" && key != "c0" && key != "label" && key != "blocks")
      fail("unknown field '" + key + "'");
  }
  double c0 = doc.contains("c0") ? number(doc.at("c0"), "c0") : 0.0;
  std::string label;
  if (doc.contains("label")) {
    if (!doc.at("label").is_string()) fail("field 'label': expected a string");
    label = doc.at("label").get<std::string>();
  }
  bool hasMatrices = doc.contains("omega") || doc.contains("b");
  bool hasBlocks = doc.contains("blocks");
  if (hasMatrices == hasBlocks) fail("exactly one of {omega + b, blocks} must be present");

  std::optional<Eigen::Index> dim;
  if (doc.contains("dim")) {
    const json& d = doc.at("dim");
    if (!d.is_number_integer() || d.get<long long>() < 1) fail("field 'dim': expected a positive integer");
    dim = d.get<Eigen::Index>();
  }

  try {
    if (hasBlocks) {
      const json& blocks = doc.at("blocks");
      if (!blocks.is_array() || blocks.empty()) fail("field 'blocks': expected a non-empty list");
      analytic::BlockModelParams params;
      for (std::size_t k = 0; k < blocks.size(); ++k) {
        std::string where = "blocks[" + std::to_string(k) + "]";
        const json& block = blocks[k];
        if (!block.is_array() || block.size() != 3) fail("field '" + where + "': expected [omegaMinus, omegaPlus, b]");
        params.blocks.push_back({number(block[0], where + "[0]"), number(block[1], where + "[1]"),
                                 number(block[2], where + "[2]")});
      }
      if (dim && *dim != static_cast<Eigen::Index>(2 * params.blocks.size()))
        fail("field 'dim': does not match 2 * number of blocks");
      QuadraticSpec spec = analytic::block_spec(params, label);
      spec.c0 = c0;
      return spec;
    }
    if (!dim) fail("missing field 'dim'");
    Matrix omega = read_matrix(doc, "omega", *dim);
    Matrix b = read_matrix(doc, "b", *dim);
    return QuadraticSpec::make(omega, b, c0, label);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError) throw;
    fail(e.what());
  }
}

QuadraticSpec read_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_spec(buffer.str());
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + std::string(e.what()).substr(12));
  }
}

std::string write_spec(const QuadraticSpec& spec, const std::string& headerComment) {
  std::ostringstream body;
  body << "{\n  \"dim\": " << spec.dim() << ",\n  \"label\": " << json(spec.label).dump()
       << ",\n  \"c0\": " << json(spec.c0).dump() << ",\n  \"omega\": " << write_matrix(spec.omega.matrix()).dump()
       << ",\n  \"b\": " << write_matrix(spec.b.matrix()).dump() << "\n}\n";
  std::string out;
  if (!headerComment.empty()) {
    std::istringstream lines(headerComment);
    for (std::string line; std::getline(lines, line);) out += "// " + line + "\n";
  }
  return out + body.str();
}

CsvRow csv_row(const flow::Sample& sample) {
  return {sample.state.t,          sample.diag.hsB,           sample.state.c,
          sample.diag.minEigOmega, sample.diag.motionResidual, sample.diag.kNorm};
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.hsB, r.c, r.minEigOmega,
                  r.motionResidual, r.kNorm);
    out << buf;
  }
}

std::vector<CsvRow> read_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) fail("csv: missing or unexpected header");
  std::size_t lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    CsvRow r;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &r.t, &r.hsB, &r.c, &r.minEigOmega, &r.motionResidual,
                    &r.kNorm) != 6)
      fail("csv line " + std::to_string(lineNo) + ": expected 6 numbers");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace bwflow::io
