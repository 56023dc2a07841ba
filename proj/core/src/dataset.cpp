#include "kroncov/dataset.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kroncov/errors.hpp"

namespace kroncov {

namespace {

bool is_blank(const std::string& line) {
  for (char c : line)
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

// Parses all doubles on a line; returns false on any trailing garbage.
bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  const char* s = line.c_str();
  char* end = nullptr;
  for (;;) {
    while (*s && std::isspace(static_cast<unsigned char>(*s))) ++s;
    if (!*s) return true;
    const double v = std::strtod(s, &end);
    if (end == s) return false;
    out.push_back(v);
    s = end;
  }
}

class LineReader {
public:
  explicit LineReader(std::istream& in) : in_(in) {}
  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++lineno_;
    return true;
  }
  long lineno() const { return lineno_; }

private:
  std::istream& in_;
  long lineno_ = 0;
};

void format_row(std::string& buf, const double* row, Eigen::Index n,
                Eigen::Index stride) {
  char num[32];
  for (Eigen::Index j = 0; j < n; ++j) {
    std::snprintf(num, sizeof(num), "%.17g", row[j * stride]);
    if (j) buf += ' ';
    buf += num;
  }
  buf += '\n';
}

}  // namespace

MatrixDataset::MatrixDataset(Eigen::Index T, Eigen::Index p, Eigen::Index q)
    : T_(T), p_(p), q_(q) {
  if (T < 1 || p < 1 || q < 1)
    throw ConfigError("MatrixDataset requires T, p, q >= 1");
  stacked_ = Eigen::MatrixXd::Zero(p, T * q);
}

MatrixDataset MatrixDataset::from_observations(
    const std::vector<Eigen::MatrixXd>& obs) {
  if (obs.empty()) throw ConfigError("MatrixDataset requires T >= 1");
  MatrixDataset ds(static_cast<Eigen::Index>(obs.size()), obs[0].rows(),
                   obs[0].cols());
  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (obs[t].rows() != ds.p_ || obs[t].cols() != ds.q_)
      throw ConfigError("observation " + std::to_string(t) +
                        " has inconsistent dimensions");
    ds.observation(static_cast<Eigen::Index>(t)) = obs[t];
  }
  ds.validate_finite();
  return ds;
}

MatrixDataset MatrixDataset::transposed() const {
  MatrixDataset out(T_, q_, p_);
  for (Eigen::Index t = 0; t < T_; ++t)
    out.observation(t) = observation(t).transpose();
  return out;
}

void MatrixDataset::validate_finite() const {
  if (!stacked_.allFinite())
    throw ConfigError("dataset contains non-finite entries");
}

SymmetricMatrix::SymmetricMatrix(Eigen::MatrixXd m, double tol) {
  if (m.rows() != m.cols())
    throw ConfigError("symmetric matrix must be square");
  if (!m.allFinite())
    throw ConfigError("symmetric matrix contains non-finite entries");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol)
    throw ConfigError("matrix is not symmetric (max |M - M'| = " +
                      std::to_string(asym) + ")");
  m_ = 0.5 * (m + m.transpose().eval());
}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index n) {
  return SymmetricMatrix(Eigen::MatrixXd::Identity(n, n));
}

SymmetricMatrix rescale_trace(const SymmetricMatrix& sigma) {
  const double tr = sigma.mat().trace();
  if (!(tr > 0)) throw ConfigError("rescale_trace: trace must be positive");
  const double scale = static_cast<double>(sigma.dim()) / tr;
  return SymmetricMatrix(scale * sigma.mat());
}

MatrixDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  LineReader reader(in);
  std::string line;

  if (!reader.next(line) || line != "# mvds 1")
    throw ParseError("malformed header: expected '# mvds 1'", reader.lineno());

  if (!reader.next(line))
    throw ParseError("missing dimension line 'T p q'", reader.lineno() + 1);
  long T = 0, p = 0, q = 0;
  {
    std::istringstream dims(line);
    std::string extra;
    if (!(dims >> T >> p >> q) || (dims >> extra) || T < 1 || p < 1 || q < 1)
      throw ParseError("malformed dimension line: expected 'T p q'",
                       reader.lineno());
  }

  MatrixDataset ds(T, p, q);
  std::vector<double> row;
  for (long t = 0; t < T; ++t) {
    long r = 0;
    while (r < p) {
      if (!reader.next(line))
        throw ParseError("expected " + std::to_string(T) + " blocks, found " +
                             std::to_string(t),
                         reader.lineno());
      if (is_blank(line)) {
        if (r == 0) continue;  // blank lines allowed between blocks only
        throw ParseError("unexpected blank line inside block " +
                             std::to_string(t + 1),
                         reader.lineno());
      }
      if (!parse_row(line, row))
        throw ParseError("unparseable entry", reader.lineno());
      if (static_cast<long>(row.size()) != q)
        throw ParseError("dimension mismatch: expected " + std::to_string(q) +
                             " entries, found " + std::to_string(row.size()),
                         reader.lineno());
      for (long j = 0; j < q; ++j) {
        if (!std::isfinite(row[j]))
          throw ParseError("non-finite entry", reader.lineno());
        ds.observation(t)(r, j) = row[j];
      }
      ++r;
    }
  }
  while (reader.next(line)) {
    if (!is_blank(line))
      throw ParseError("trailing content after last block", reader.lineno());
  }
  return ds;
}

void write_dataset(const std::filesystem::path& path, const MatrixDataset& ds) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# mvds 1\n"
      << ds.num_obs() << ' ' << ds.rows() << ' ' << ds.cols() << '\n';
  std::string buf;
  for (Eigen::Index t = 0; t < ds.num_obs(); ++t) {
    if (t) out << '\n';
    const auto obs = ds.observation(t);
    for (Eigen::Index i = 0; i < ds.rows(); ++i) {
      buf.clear();
      format_row(buf, obs.data() + i, ds.cols(), obs.outerStride());
      out << buf;
    }
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

SymmetricMatrix load_symmetric(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  LineReader reader(in);
  std::string line;
  if (!reader.next(line))
    throw ParseError("missing dimension line", 1);
  long n = 0;
  {
    std::istringstream hdr(line);
    std::string extra;
    if (!(hdr >> n) || (hdr >> extra) || n < 1)
      throw ParseError("malformed dimension line: expected 'n'", reader.lineno());
  }
  Eigen::MatrixXd m(n, n);
  std::vector<double> row;
  long r = 0;
  while (r < n) {
    if (!reader.next(line))
      throw ParseError("expected " + std::to_string(n) + " rows, found " +
                           std::to_string(r),
                       reader.lineno());
    if (is_blank(line)) continue;
    if (!parse_row(line, row))
      throw ParseError("unparseable entry", reader.lineno());
    if (static_cast<long>(row.size()) != n)
      throw ParseError("dimension mismatch: expected " + std::to_string(n) +
                           " entries, found " + std::to_string(row.size()),
                       reader.lineno());
    for (long j = 0; j < n; ++j) {
      if (!std::isfinite(row[j]))
        throw ParseError("non-finite entry", reader.lineno());
      m(r, j) = row[j];
    }
    ++r;
  }
  return SymmetricMatrix(m);
}

void write_symmetric(const std::filesystem::path& path,
                     const SymmetricMatrix& m) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << m.dim() << '\n';
  std::string buf;
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    buf.clear();
    format_row(buf, &m.mat()(i, 0), m.dim(), m.mat().outerStride());
    out << buf;
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace kroncov
