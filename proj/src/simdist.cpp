#include "spacecov/simdist.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "spacecov/csv.hpp"
#include "spacecov/error.hpp"

namespace spacecov {

std::string to_string(MatrixKind kind) {
  switch (kind) {
    case MatrixKind::SCENE_SIM: return "SCENE_SIM";
    case MatrixKind::SCENE_DISSIM: return "SCENE_DISSIM";
    case MatrixKind::LANG_DIST: return "LANG_DIST";
    case MatrixKind::LANG_SIM: return "LANG_SIM";
  }
  fail("unreachable matrix kind");
}

MatrixKind matrix_kind_from_string(const std::string& s) {
  if (s == "SCENE_SIM") return MatrixKind::SCENE_SIM;
  if (s == "SCENE_DISSIM") return MatrixKind::SCENE_DISSIM;
  if (s == "LANG_DIST") return MatrixKind::LANG_DIST;
  if (s == "LANG_SIM") return MatrixKind::LANG_SIM;
  fail("unknown matrix kind: '", s, "'");
}

namespace {

bool is_similarity(MatrixKind kind) {
  return kind == MatrixKind::SCENE_SIM || kind == MatrixKind::LANG_SIM;
}

// Slack for the [0,1] range checks; normalized VI can exceed 1 by rounding
// before clamping, and serialized values re-enter through here.
constexpr double kRangeEps = 1e-12;

}  // namespace

SymmetricMatrix::SymmetricMatrix(std::vector<std::string> ids, MatrixKind kind)
    : ids_(std::move(ids)), kind_(kind) {
  if (ids_.empty()) fail("symmetric matrix: empty id list");
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (!index_.emplace(ids_[i], i).second)
      fail("symmetric matrix: duplicate id '", ids_[i], "'");
  values_.assign(ids_.size() * ids_.size(),
                 is_similarity(kind_) ? 1.0 : 0.0);
  if (is_similarity(kind_)) {
    for (std::size_t i = 0; i < ids_.size(); ++i)
      for (std::size_t j = 0; j < ids_.size(); ++j)
        if (i != j) values_[i * ids_.size() + j] = 0.0;
  }
}

void SymmetricMatrix::set(std::size_t i, std::size_t j, double v) {
  values_[i * ids_.size() + j] = v;
  values_[j * ids_.size() + i] = v;
}

std::size_t SymmetricMatrix::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail("unknown id: '", id, "'");
  return it->second;
}

bool SymmetricMatrix::contains(const std::string& id) const {
  return index_.count(id) > 0;
}

void SymmetricMatrix::validate() const {
  std::size_t n = ids_.size();
  for (std::size_t i = 0; i < n; ++i) {
    double diag = at(i, i);
    double want = is_similarity(kind_) ? 1.0 : 0.0;
    if (diag != want)
      fail("matrix(", to_string(kind_), "): diagonal at '", ids_[i], "' is ",
           diag, ", expected ", want);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (at(i, j) != at(j, i))
        fail("matrix(", to_string(kind_), "): asymmetric at ('", ids_[i], "','",
             ids_[j], "')");
      double v = at(i, j);
      if (!(v >= 0.0)) fail("matrix(", to_string(kind_), "): negative value ", v);
      if (kind_ != MatrixKind::LANG_DIST && v > 1.0 + kRangeEps)
        fail("matrix(", to_string(kind_), "): value ", v, " exceeds 1");
    }
  }
}

void SymmetricMatrix::write_csv(std::ostream& out,
                                const std::vector<std::string>& comments) const {
  out << "# kind: " << to_string(kind_) << "\n";
  for (const std::string& c : comments) out << "# " << c << "\n";
  std::vector<std::string> header{"id"};
  header.insert(header.end(), ids_.begin(), ids_.end());
  out << csv::format_row(header);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    std::vector<std::string> row{ids_[i]};
    for (std::size_t j = 0; j < ids_.size(); ++j)
      row.push_back(csv::format_double(at(i, j)));
    out << csv::format_row(row);
  }
}

std::string SymmetricMatrix::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

SymmetricMatrix SymmetricMatrix::read_csv(std::istream& in,
                                          std::optional<MatrixKind> expected) {
  csv::Document doc = csv::read(in);
  std::optional<MatrixKind> declared;
  for (const std::string& c : doc.comments) {
    if (c.rfind("kind: ", 0) == 0)
      declared = matrix_kind_from_string(c.substr(6));
  }
  if (declared && expected && *declared != *expected)
    fail("matrix CSV declares kind ", to_string(*declared), " but ",
         to_string(*expected), " was expected");
  if (!declared && !expected)
    fail("matrix CSV has no '# kind:' comment and no expected kind was given");
  MatrixKind kind = declared ? *declared : *expected;

  if (doc.header.fields.empty() || doc.header.fields[0] != "id")
    fail("matrix CSV line ", doc.header.line, ": header must start with 'id'");
  std::vector<std::string> ids(doc.header.fields.begin() + 1,
                               doc.header.fields.end());
  if (doc.records.size() != ids.size())
    fail("matrix CSV: ", ids.size(), " ids in header but ", doc.records.size(),
         " rows");
  SymmetricMatrix m(ids, kind);
  for (std::size_t i = 0; i < doc.records.size(); ++i) {
    const csv::Record& rec = doc.records[i];
    if (rec.fields.size() != ids.size() + 1)
      fail("matrix CSV line ", rec.line, ": expected ", ids.size() + 1,
           " fields, found ", rec.fields.size());
    if (rec.fields[0] != ids[i])
      fail("matrix CSV line ", rec.line, ": row id '", rec.fields[0],
           "' does not match header id '", ids[i], "'");
    for (std::size_t j = 0; j < ids.size(); ++j)
      m.values_[i * ids.size() + j] = csv::parse_double(rec.fields[j + 1], rec.line);
  }
  m.validate();
  return m;
}

SymmetricMatrix SymmetricMatrix::load(const std::string& path,
                                      std::optional<MatrixKind> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open matrix CSV: ", path);
  return read_csv(in, expected);
}

std::vector<int> Partition::block_sizes() const {
  std::vector<int> sizes(n_blocks, 0);
  for (int b : block_of) ++sizes[b];
  return sizes;
}

double scene_similarity(const LabelMatrix& matrix, const std::string& scene_i,
                        const std::string& scene_j) {
  std::size_t i = matrix.scene_index(scene_i);
  std::size_t j = matrix.scene_index(scene_j);
  if (i == j) return 1.0;
  std::size_t matches = 0;
  for (std::size_t l = 0; l < matrix.languages().size(); ++l)
    if (matrix.label(l, i) == matrix.label(l, j)) ++matches;
  return static_cast<double>(matches) /
         static_cast<double>(matrix.languages().size());
}

SymmetricMatrix scene_similarity_matrix(const LabelMatrix& matrix) {
  SymmetricMatrix sim(matrix.scenes(), MatrixKind::SCENE_SIM);
  std::size_t n = matrix.scenes().size();
  std::size_t n_langs = matrix.languages().size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::size_t matches = 0;
      for (std::size_t l = 0; l < n_langs; ++l)
        if (matrix.label(l, i) == matrix.label(l, j)) ++matches;
      sim.set(i, j, static_cast<double>(matches) / static_cast<double>(n_langs));
    }
  }
  return sim;
}

SymmetricMatrix to_dissimilarity(const SymmetricMatrix& m) {
  MatrixKind out_kind;
  switch (m.kind()) {
    case MatrixKind::SCENE_SIM: out_kind = MatrixKind::SCENE_DISSIM; break;
    case MatrixKind::SCENE_DISSIM: out_kind = MatrixKind::SCENE_SIM; break;
    case MatrixKind::LANG_SIM: out_kind = MatrixKind::LANG_DIST; break;
    case MatrixKind::LANG_DIST: out_kind = MatrixKind::LANG_SIM; break;
    default: fail("unreachable matrix kind");
  }
  SymmetricMatrix out(m.ids(), out_kind);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      double v = m.at(i, j);
      if (v < 0.0 || v > 1.0 + 1e-12)
        fail("to_dissimilarity: value ", v, " outside [0,1] at ('", m.ids()[i],
             "','", m.ids()[j], "')");
      out.set(i, j, 1.0 - v);
    }
  }
  return out;
}

Partition language_partition(const LabelMatrix& matrix,
                             const std::string& language) {
  std::size_t l = matrix.language_index(language);
  Partition p;
  p.elements = matrix.scenes();
  p.block_of.reserve(p.elements.size());
  std::map<std::string, int> block_by_label;
  for (std::size_t s = 0; s < p.elements.size(); ++s) {
    const std::string& label = matrix.label(l, s);
    auto [it, inserted] = block_by_label.emplace(label, p.n_blocks);
    if (inserted) ++p.n_blocks;
    p.block_of.push_back(it->second);
  }
  return p;
}

namespace {

// -sum (c/n) log2 (c/n) over counts; zero counts contribute zero.
double entropy_bits_of_counts(const std::vector<long long>& counts,
                              long long total) {
  double h = 0.0;
  auto n = static_cast<double>(total);
  for (long long c : counts) {
    if (c <= 0) continue;
    double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

double partition_entropy(const Partition& p) {
  if (p.elements.empty()) fail("partition entropy: empty partition");
  std::vector<long long> counts(p.n_blocks, 0);
  for (int b : p.block_of) ++counts[b];
  return entropy_bits_of_counts(counts, static_cast<long long>(p.elements.size()));
}

double variation_of_information(const Partition& p, const Partition& q) {
  if (p.elements.size() != q.elements.size())
    fail("variation_of_information: element counts differ (", p.elements.size(),
         " vs ", q.elements.size(), ")");
  // Align q's blocks to p's element order; the common case is identical order.
  std::vector<int> q_block(p.elements.size());
  if (p.elements == q.elements) {
    q_block = q.block_of;
  } else {
    std::map<std::string, int> q_index;
    for (std::size_t i = 0; i < q.elements.size(); ++i)
      if (!q_index.emplace(q.elements[i], q.block_of[i]).second)
        fail("variation_of_information: duplicate element '", q.elements[i], "'");
    for (std::size_t i = 0; i < p.elements.size(); ++i) {
      auto it = q_index.find(p.elements[i]);
      if (it == q_index.end())
        fail("variation_of_information: element '", p.elements[i],
             "' missing from second partition");
      q_block[i] = it->second;
    }
  }

  auto n = static_cast<long long>(p.elements.size());
  std::vector<long long> p_counts(p.n_blocks, 0);
  std::vector<long long> q_counts(q.n_blocks, 0);
  std::map<std::pair<int, int>, long long> joint;
  for (std::size_t i = 0; i < p.elements.size(); ++i) {
    ++p_counts[p.block_of[i]];
    ++q_counts[q_block[i]];
    ++joint[{p.block_of[i], q_block[i]}];
  }
  std::vector<long long> joint_counts;
  joint_counts.reserve(joint.size());
  for (const auto& [key, count] : joint) joint_counts.push_back(count);

  // VI = 2 H(P,Q) - H(P) - H(Q); identical partitions cancel exactly.
  double vi = 2.0 * entropy_bits_of_counts(joint_counts, n) -
              entropy_bits_of_counts(p_counts, n) -
              entropy_bits_of_counts(q_counts, n);
  return std::max(0.0, vi);
}

SymmetricMatrix language_distance_matrix(const LabelMatrix& matrix,
                                         bool normalize) {
  if (matrix.languages().size() < 2)
    fail("language_distance_matrix: need at least 2 languages");
  if (matrix.scenes().size() < 2)
    fail("language_distance_matrix: need at least 2 scenes (normalization "
         "divides by log2(n))");
  std::vector<Partition> partitions;
  partitions.reserve(matrix.languages().size());
  for (const std::string& lang : matrix.languages())
    partitions.push_back(language_partition(matrix, lang));

  double scale =
      normalize ? std::log2(static_cast<double>(matrix.scenes().size())) : 1.0;
  SymmetricMatrix dist(matrix.languages(), MatrixKind::LANG_DIST);
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    for (std::size_t j = i + 1; j < partitions.size(); ++j) {
      double vi = variation_of_information(partitions[i], partitions[j]);
      double v = vi / scale;
      if (normalize && v > 1.0) v = 1.0;  // rounding guard; VI <= log2(n)
      dist.set(i, j, v);
    }
  }
  return dist;
}

SymmetricMatrix language_similarity_matrix(const SymmetricMatrix& dist) {
  if (dist.kind() != MatrixKind::LANG_DIST)
    fail("language_similarity_matrix: input kind is ", to_string(dist.kind()),
         ", expected LANG_DIST");
  for (std::size_t i = 0; i < dist.size(); ++i)
    for (std::size_t j = i + 1; j < dist.size(); ++j)
      if (dist.at(i, j) > 1.0 + kRangeEps)
        fail("language_similarity_matrix: value ", dist.at(i, j),
             " exceeds 1; pass a normalized distance matrix");
  SymmetricMatrix sim(dist.ids(), MatrixKind::LANG_SIM);
  for (std::size_t i = 0; i < dist.size(); ++i)
    for (std::size_t j = i + 1; j < dist.size(); ++j)
      sim.set(i, j, 1.0 - dist.at(i, j));
  return sim;
}

}  // namespace spacecov
