#include "aglnet/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace aglnet {

using nlohmann::json;

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t";
  for (Index j = 0; j < traj.dim(); ++j) os << ",x" << (j + 1);
  os << "\n";
  for (Index i = 0; i < traj.samples(); ++i) {
    os << fmt_g17(traj.times[i]);
    for (Index j = 0; j < traj.dim(); ++j)
      os << ',' << fmt_g17(traj.states(i, j));
    os << "\n";
  }
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path + " for reading");
  return f;
}

json vector_to_json(const VectorXr& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VectorXr vector_from_json(const json& a) {
  VectorXr v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

json matrix_to_json(const MatrixXr& m) {  // row-major nested arrays
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

MatrixXr matrix_from_json(const json& rows) {
  const Index r = rows.size();
  const Index c = r > 0 ? Index(rows[0].size()) : 0;
  MatrixXr m(r, c);
  for (Index i = 0; i < r; ++i) {
    if (Index(rows[i].size()) != c)
      throw IoError("ragged matrix rows in JSON");
    for (Index j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

json index_set_to_json(const IndexSet& s) {
  json a = json::array();
  for (int v : s) a.push_back(v);
  return a;
}

IndexSet index_set_from_json(const json& a) {
  IndexSet s;
  for (const auto& v : a) s.insert(v.get<int>());
  return s;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  auto f = open_out(path);
  write_trajectory_csv(f, traj);
  if (!f) throw IoError("failed writing " + path);
}

void write_dataset(const std::string& csv_path, const std::string& sidecar_path,
                   const Dataset& ds, const NoiseSpec& noise) {
  {
    auto f = open_out(csv_path);
    for (Index j = 0; j < ds.dim(); ++j) f << "x" << (j + 1) << ",";
    f << "y\n";
    for (Index i = 0; i < ds.samples(); ++i) {
      for (Index j = 0; j < ds.dim(); ++j) f << fmt_g17(ds.raw_X(i, j)) << ',';
      f << fmt_g17(ds.raw_y[i]) << "\n";
    }
    if (!f) throw IoError("failed writing " + csv_path);
  }
  json side;
  side["sigma_j"] = vector_to_json(ds.scales.sigma_j);
  side["alpha"] = ds.scales.alpha;
  side["true_support"] = index_set_to_json(ds.true_support);
  side["noise"] = {{"sigma_x", noise.sigma_x},
                   {"sigma_y", noise.sigma_y},
                   {"seed", noise.seed}};
  side["times"] = vector_to_json(ds.times);
  write_json_file(sidecar_path, side);
}

Dataset read_dataset(const std::string& csv_path,
                     const std::string& sidecar_path) {
  auto f = open_in(csv_path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty dataset file " + csv_path);
  Index d = 0;
  {
    std::stringstream hdr(line);
    std::string cell;
    std::vector<std::string> cols;
    while (std::getline(hdr, cell, ',')) cols.push_back(cell);
    if (cols.size() < 2 || cols.back() != "y")
      throw IoError("dataset header must be x1..xd,y");
    d = static_cast<Index>(cols.size()) - 1;
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (Index(row.size()) != d + 1)
      throw IoError("dataset row width mismatch in " + csv_path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("dataset has no rows: " + csv_path);

  Dataset ds;
  ds.raw_X.resize(Index(rows.size()), d);
  ds.raw_y.resize(Index(rows.size()));
  for (Index i = 0; i < Index(rows.size()); ++i) {
    for (Index j = 0; j < d; ++j) ds.raw_X(i, j) = rows[i][j];
    ds.raw_y[i] = rows[i][d];
  }

  const json side = read_json_file(sidecar_path);
  ds.scales.sigma_j = vector_from_json(side.at("sigma_j"));
  ds.scales.alpha = side.at("alpha").get<double>();
  ds.true_support = index_set_from_json(side.at("true_support"));
  if (side.contains("times")) ds.times = vector_from_json(side.at("times"));
  if (ds.scales.sigma_j.size() != d)
    throw IoError("sidecar scale length does not match dataset width");
  ds.X = ds.raw_X;
  for (Index j = 0; j < d; ++j) ds.X.col(j) /= ds.scales.sigma_j[j];
  ds.y = ds.raw_y / ds.scales.alpha;
  return ds;
}

VectorXr ModelBundle::predict_raw(const MatrixXr& raw_X) const {
  require(raw_X.cols() == scales.sigma_j.size(),
          "prediction input width mismatch");
  MatrixXr X = raw_X;
  for (Index j = 0; j < X.cols(); ++j) X.col(j) /= scales.sigma_j[j];
  if (kind == "network") {
    return scales.alpha * forward(params, arch, X);
  }
  if (kind == "dictionary") {
    std::vector<int> all(exponents.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = int(i);
    MatrixXr cols = monomial_columns(X, exponents, all);
    return scales.alpha * (cols * coefficients);
  }
  throw ContractViolation("unknown model kind " + kind);
}

json model_to_json(const ModelBundle& mb) {
  json j;
  j["kind"] = mb.kind;
  j["threshold"] = mb.threshold;
  j["support"] = index_set_to_json(mb.support);
  j["scales"] = {{"sigma_j", vector_to_json(mb.scales.sigma_j)},
                 {"alpha", mb.scales.alpha}};
  if (mb.kind == "network") {
    j["layer_dims"] = mb.arch.layer_dims;
    j["first_activation"] =
        mb.arch.first_activation == Activation::identity ? "identity" : "tanh";
    j["penalized_layer"] = mb.penalized_layer;
    json ws = json::array(), bs = json::array();
    for (const auto& w : mb.params.weights) ws.push_back(matrix_to_json(w));
    for (const auto& b : mb.params.biases) bs.push_back(vector_to_json(b));
    j["weights"] = std::move(ws);
    j["biases"] = std::move(bs);
  } else if (mb.kind == "dictionary") {
    j["degree"] = mb.degree;
    j["exponents"] = mb.exponents;
    j["coefficients"] = vector_to_json(mb.coefficients);
    j["coefficients_raw"] = vector_to_json(mb.coefficients_raw);
  } else {
    throw ContractViolation("unknown model kind " + mb.kind);
  }
  return j;
}

ModelBundle model_from_json(const json& j) {
  ModelBundle mb;
  mb.kind = j.at("kind").get<std::string>();
  mb.threshold = j.at("threshold").get<double>();
  mb.support = index_set_from_json(j.at("support"));
  mb.scales.sigma_j = vector_from_json(j.at("scales").at("sigma_j"));
  mb.scales.alpha = j.at("scales").at("alpha").get<double>();
  if (mb.kind == "network") {
    mb.arch.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    mb.arch.first_activation =
        j.at("first_activation").get<std::string>() == "identity"
            ? Activation::identity
            : Activation::tanh;
    mb.penalized_layer = j.at("penalized_layer").get<int>();
    mb.arch.validate();
    for (const auto& w : j.at("weights"))
      mb.params.weights.push_back(matrix_from_json(w));
    for (const auto& b : j.at("biases"))
      mb.params.biases.push_back(vector_from_json(b));
    check_shapes(mb.params, mb.arch);
  } else if (mb.kind == "dictionary") {
    mb.degree = j.at("degree").get<int>();
    mb.exponents = j.at("exponents").get<std::vector<std::vector<int>>>();
    mb.coefficients = vector_from_json(j.at("coefficients"));
    mb.coefficients_raw = vector_from_json(j.at("coefficients_raw"));
    if (mb.coefficients.size() != Index(mb.exponents.size()))
      throw IoError("dictionary model coefficients/exponents mismatch");
  } else {
    throw IoError("unknown model kind '" + mb.kind + "'");
  }
  return mb;
}

void write_model(const std::string& path, const ModelBundle& mb) {
  write_json_file(path, model_to_json(mb));
}

ModelBundle read_model(const std::string& path) {
  return model_from_json(read_json_file(path));
}

json read_json_file(const std::string& path) {
  auto f = open_in(path);
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw IoError("cannot parse " + path + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  auto f = open_out(path);
  f << j.dump(2) << "\n";
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace aglnet
