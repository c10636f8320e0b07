#pragma once

// Per-region feedforward predictors for the coupling quantities. One small
// two-layer ReLU network per (region, quantity type), trained on MSE with
// mini-batch SGD and optional tail-averaging of the iterates. Outputs are
// standardized with a positive offset before training so the ReLU output
// layer can represent signed targets after de-normalization.

#include <complex>
#include <filesystem>
#include <random>
#include <thread>

#include <json.hpp>

#include "gridmm/admm.hpp"

namespace gridmm {

// --- complex component splitting ---

// S-type quantities split into rectangular components, V-type into polar.
inline void split_rect(const std::vector<std::complex<double>>& values,
                       VectorXd& re, VectorXd& im) {
  re.resize(static_cast<int>(values.size()));
  im.resize(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto c = ComplexSplit::from_rect(values[i].real(), values[i].imag());
    re[static_cast<int>(i)] = c.re;
    im[static_cast<int>(i)] = c.im;
  }
}

inline void split_polar(const std::vector<std::complex<double>>& values,
                        VectorXd& mag, VectorXd& ang) {
  mag.resize(static_cast<int>(values.size()));
  ang.resize(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto c = ComplexSplit::from_rect(values[i].real(), values[i].imag());
    mag[static_cast<int>(i)] = c.mag;
    ang[static_cast<int>(i)] = c.ang;
  }
}

inline std::vector<std::complex<double>> recombine_rect(const VectorXd& re,
                                                        const VectorXd& im) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(re.size()));
  for (int i = 0; i < re.size(); ++i) out[static_cast<std::size_t>(i)] = {re[i], im[i]};
  return out;
}

inline std::vector<std::complex<double>> recombine_polar(const VectorXd& mag,
                                                         const VectorXd& ang) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(mag.size()));
  for (int i = 0; i < mag.size(); ++i) {
    auto c = ComplexSplit::from_polar(mag[i], ang[i]);
    out[static_cast<std::size_t>(i)] = {c.re, c.im};
  }
  return out;
}

// --- the network ---

struct Fnn {
  MatrixXd W1;  // hidden x n_in
  VectorXd b1;
  MatrixXd W2;  // n_out x hidden
  VectorXd b2;

  int n_in() const { return static_cast<int>(W1.cols()); }
  int n_out() const { return static_cast<int>(W2.rows()); }
  int hidden() const { return static_cast<int>(W1.rows()); }
};

inline double rng_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// He-style initialization; the hidden layer is twice the output dimension.
// Both biases start positive: with zero biases the output ReLUs are born
// dead and never receive gradient.
inline Fnn make_fnn(int n_in, int n_out, std::mt19937_64& rng,
                    double hidden_bias = 0.1, double out_bias = 0.5) {
  if (n_in <= 0 || n_out <= 0) throw std::invalid_argument("empty fnn dimensions");
  int hidden = 2 * n_out;
  Fnn net;
  net.W1.resize(hidden, n_in);
  net.b1 = VectorXd::Constant(hidden, hidden_bias);
  net.W2.resize(n_out, hidden);
  net.b2 = VectorXd::Constant(n_out, out_bias);
  double s1 = std::sqrt(2.0 / n_in), s2 = std::sqrt(2.0 / hidden);
  for (int i = 0; i < hidden; ++i)
    for (int j = 0; j < n_in; ++j)
      net.W1(i, j) = s1 * (2.0 * rng_uniform(rng) - 1.0);
  for (int i = 0; i < n_out; ++i)
    for (int j = 0; j < hidden; ++j)
      net.W2(i, j) = s2 * (2.0 * rng_uniform(rng) - 1.0);
  return net;
}

inline VectorXd fnn_forward(const Fnn& net, const VectorXd& x) {
  if (x.size() != net.n_in())
    throw std::invalid_argument("fnn input dimension mismatch: expected " +
                                std::to_string(net.n_in()) + ", got " +
                                std::to_string(x.size()));
  VectorXd h = (net.W1 * x + net.b1).cwiseMax(0.0);
  return (net.W2 * h + net.b2).cwiseMax(0.0);
}

struct FnnGradients {
  MatrixXd dW1, dW2;
  VectorXd db1, db2;
};

// Mean squared error over a batch (mean over samples and components) and
// its gradients via backpropagation. Columns of X/Y are samples.
inline double fnn_loss_and_gradients(const Fnn& net, const MatrixXd& X,
                                     const MatrixXd& Y, FnnGradients& grads) {
  const int batch = static_cast<int>(X.cols());
  const int m = net.n_out();
  MatrixXd H_pre = (net.W1 * X).colwise() + net.b1;
  MatrixXd H = H_pre.cwiseMax(0.0);
  MatrixXd Y_pre = (net.W2 * H).colwise() + net.b2;
  MatrixXd Y_hat = Y_pre.cwiseMax(0.0);
  MatrixXd diff = Y_hat - Y;
  double loss = diff.squaredNorm() / (batch * m);

  MatrixXd dY = (2.0 / (batch * m)) * diff;
  MatrixXd dY_pre =
      dY.cwiseProduct((Y_pre.array() > 0.0).cast<double>().matrix());
  grads.dW2 = dY_pre * H.transpose();
  grads.db2 = dY_pre.rowwise().sum();
  MatrixXd dH = net.W2.transpose() * dY_pre;
  MatrixXd dH_pre = dH.cwiseProduct((H_pre.array() > 0.0).cast<double>().matrix());
  grads.dW1 = dH_pre * X.transpose();
  grads.db1 = dH_pre.rowwise().sum();
  return loss;
}

struct TrainConfig {
  int epochs = 1000;
  int batch = 64;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  bool asgd = true;          // tail-averaged SGD
  double tail_frac = 0.25;   // fraction of final steps averaged
};

struct TrainCurve {
  std::vector<double> epoch_loss;
};

// Mini-batch SGD on MSE. Throws on a non-finite loss.
inline TrainCurve train_fnn(Fnn& net, const MatrixXd& X, const MatrixXd& Y,
                            const TrainConfig& cfg) {
  const int n = static_cast<int>(X.cols());
  if (n == 0) throw std::invalid_argument("empty training set");
  if (Y.cols() != n) throw std::invalid_argument("input/target count mismatch");
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  const int batches = (n + cfg.batch - 1) / cfg.batch;
  const long total_steps = static_cast<long>(cfg.epochs) * batches;
  const long tail_start =
      cfg.asgd ? static_cast<long>((1.0 - cfg.tail_frac) * total_steps) : total_steps;
  Fnn avg = net;
  avg.W1.setZero();
  avg.b1.setZero();
  avg.W2.setZero();
  avg.b2.setZero();
  long averaged = 0;

  TrainCurve curve;
  FnnGradients grads;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the run's own generator
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    double epoch_loss = 0.0;
    for (int b = 0; b < batches; ++b, ++step) {
      int lo = b * cfg.batch;
      int hi = std::min(n, lo + cfg.batch);
      MatrixXd Xb(X.rows(), hi - lo), Yb(Y.rows(), hi - lo);
      for (int i = lo; i < hi; ++i) {
        Xb.col(i - lo) = X.col(order[static_cast<std::size_t>(i)]);
        Yb.col(i - lo) = Y.col(order[static_cast<std::size_t>(i)]);
      }
      double loss = fnn_loss_and_gradients(net, Xb, Yb, grads);
      if (!std::isfinite(loss))
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
      epoch_loss += loss * (hi - lo);
      net.W1 -= cfg.lr * grads.dW1;
      net.b1 -= cfg.lr * grads.db1;
      net.W2 -= cfg.lr * grads.dW2;
      net.b2 -= cfg.lr * grads.db2;
      if (step >= tail_start) {
        avg.W1 += net.W1;
        avg.b1 += net.b1;
        avg.W2 += net.W2;
        avg.b2 += net.b2;
        ++averaged;
      }
    }
    curve.epoch_loss.push_back(epoch_loss / n);
  }
  if (cfg.asgd && averaged > 0) {
    net.W1 = avg.W1 / static_cast<double>(averaged);
    net.b1 = avg.b1 / static_cast<double>(averaged);
    net.W2 = avg.W2 / static_cast<double>(averaged);
    net.b2 = avg.b2 / static_cast<double>(averaged);
  }
  return curve;
}

// --- quantity bookkeeping ---

// The 8 one-level prediction types, extended by 8 slack/outer types.
enum class Quantity {
  pC = 0, qC, vC, thC,
  lam_p, lam_q, lam_v, lam_th,
  z_p, z_q, z_v, z_th,
  Lam_p, Lam_q, Lam_v, Lam_th,
};

inline const char* quantity_name(Quantity q) {
  static const char* names[] = {"pC", "qC", "vC", "thC", "lam_p", "lam_q",
                                "lam_v", "lam_th", "z_p", "z_q", "z_v", "z_th",
                                "Lam_p", "Lam_q", "Lam_v", "Lam_th"};
  return names[static_cast<int>(q)];
}

inline int quantity_count(bool two_level) { return two_level ? 16 : 8; }

// Regional targets vector for one quantity type, one entry per directed
// coupling branch.
inline VectorXd extract_quantity(const CouplingTargets& tg, Quantity q) {
  int qi = static_cast<int>(q);
  const VectorXd& src = qi < 4 ? tg.cons : qi < 8 ? tg.lam : qi < 12 ? tg.z : tg.Lam;
  int comp = qi % 4;
  VectorXd out(src.size() / 4);
  for (int s = comp, i = 0; s < src.size(); s += 4, ++i) out[i] = src[s];
  return out;
}

inline void insert_quantity(CouplingTargets& tg, Quantity q, const VectorXd& vals) {
  int qi = static_cast<int>(q);
  VectorXd& dst = qi < 4 ? tg.cons : qi < 8 ? tg.lam : qi < 12 ? tg.z : tg.Lam;
  int comp = qi % 4;
  for (int s = comp, i = 0; s < dst.size(); s += 4, ++i) dst[s] = vals[i];
}

// --- the predictor bank ---

struct Normalizer {
  VectorXd mean, stdev;
  double offset = 0.0;  // shifts standardized targets into ReLU range

  VectorXd encode(const VectorXd& v) const {
    return ((v - mean).array() / stdev.array() + offset).matrix();
  }
  VectorXd decode(const VectorXd& v) const {
    return ((v.array() - offset) * stdev.array()).matrix() + mean;
  }
};

inline Normalizer fit_normalizer(const MatrixXd& samples, double offset) {
  Normalizer norm;
  norm.offset = offset;
  norm.mean = samples.rowwise().mean();
  VectorXd var = (samples.colwise() - norm.mean).rowwise().squaredNorm() /
                 std::max(1, static_cast<int>(samples.cols()));
  norm.stdev = var.cwiseSqrt();
  for (int i = 0; i < norm.stdev.size(); ++i)
    if (norm.stdev[i] < 1e-12) norm.stdev[i] = 1.0;
  return norm;
}

struct PredictorBank {
  bool two_level = false;
  bool normalize = true;     // the literal raw-target variant sits behind this
  double out_offset = 4.0;
  std::vector<Normalizer> input_norms;  // per region (filters skew the inputs)
  // model and output statistics per region and quantity type
  std::vector<std::vector<Fnn>> models;
  std::vector<std::vector<Normalizer>> out_norms;
  std::vector<bool> trained;

  int regions() const { return static_cast<int>(models.size()); }
};

// One region's training slice: shared input features and per-quantity targets.
struct RegionDataset {
  MatrixXd X;               // n_in x N
  std::vector<MatrixXd> Y;  // per quantity: dim_q x N
};

inline PredictorBank make_bank(const std::vector<RegionView>& views, int n_loads,
                               bool two_level, std::uint64_t seed = 7) {
  PredictorBank bank;
  bank.two_level = two_level;
  int nq = quantity_count(two_level);
  bank.models.resize(views.size());
  bank.out_norms.resize(views.size());
  bank.input_norms.resize(views.size());
  bank.trained.assign(views.size(), false);
  for (std::size_t k = 0; k < views.size(); ++k) {
    int dim_q = 2 * static_cast<int>(views[k].coupling_branches.size());
    bank.models[k].reserve(static_cast<std::size_t>(nq));
    bank.out_norms[k].resize(static_cast<std::size_t>(nq));
    for (int q = 0; q < nq; ++q) {
      std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * (k * 16 + static_cast<std::size_t>(q) + 1)));
      if (dim_q == 0) {
        bank.models[k].push_back(Fnn{});
        continue;
      }
      // standardized targets sit near the offset; start the output there
      bank.models[k].push_back(make_fnn(2 * n_loads, dim_q, rng, 0.1, bank.out_offset));
    }
  }
  return bank;
}

// Trains every model of one region on that region's data only.
inline std::vector<TrainCurve> train_region_models(PredictorBank& bank, int region,
                                                   const RegionDataset& data,
                                                   const TrainConfig& cfg) {
  int nq = quantity_count(bank.two_level);
  std::vector<TrainCurve> curves(static_cast<std::size_t>(nq));
  if (static_cast<int>(data.Y.size()) < nq)
    throw std::invalid_argument("region dataset is missing quantity targets");
  MatrixXd Xn = data.X;
  if (bank.normalize) {
    Normalizer& inorm = bank.input_norms[static_cast<std::size_t>(region)];
    inorm = fit_normalizer(data.X, 0.0);
    for (int c = 0; c < Xn.cols(); ++c)
      Xn.col(c) = inorm.encode(data.X.col(c));
  }
  for (int q = 0; q < nq; ++q) {
    Fnn& net = bank.models[static_cast<std::size_t>(region)][static_cast<std::size_t>(q)];
    if (net.n_out() == 0) continue;  // region without couplings
    MatrixXd Yn = data.Y[static_cast<std::size_t>(q)];
    if (bank.normalize) {
      Normalizer& norm =
          bank.out_norms[static_cast<std::size_t>(region)][static_cast<std::size_t>(q)];
      norm = fit_normalizer(Yn, bank.out_offset);
      for (int c = 0; c < Yn.cols(); ++c)
        Yn.col(c) = norm.encode(data.Y[static_cast<std::size_t>(q)].col(c));
    }
    TrainConfig qcfg = cfg;
    qcfg.seed = cfg.seed ^ (0xf1ea5eedull * (static_cast<std::uint64_t>(region) * 16 +
                                             static_cast<std::uint64_t>(q) + 1));
    curves[static_cast<std::size_t>(q)] = train_fnn(net, Xn, Yn, qcfg);
  }
  bank.trained[static_cast<std::size_t>(region)] = true;
  return curves;
}

// Decentralized training: one task per region, none touching another
// region's targets.
inline std::vector<std::vector<TrainCurve>> train_bank(
    PredictorBank& bank, const std::vector<RegionDataset>& data,
    const TrainConfig& cfg, int workers = 1) {
  if (static_cast<int>(data.size()) != bank.regions())
    throw std::invalid_argument("need one dataset per region");
  std::vector<std::vector<TrainCurve>> curves(data.size());
  std::vector<std::function<void()>> tasks;
  for (int k = 0; k < bank.regions(); ++k)
    tasks.push_back([&, k]() {
      curves[static_cast<std::size_t>(k)] =
          train_region_models(bank, k, data[static_cast<std::size_t>(k)], cfg);
    });
  if (workers <= 1) {
    for (auto& task : tasks) task();
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        tasks[i]();
      }
    };
    std::vector<std::thread> threads;
    for (int i = 0; i < std::min<int>(workers, static_cast<int>(tasks.size())); ++i)
      threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  return curves;
}

// Forward passes for every (region, quantity); de-normalized and assembled
// into per-region warm-start targets.
inline RegionTargets predict_warmstart(const PredictorBank& bank,
                                       const std::vector<RegionView>& views,
                                       const VectorXd& pd, const VectorXd& qd) {
  if (bank.regions() != static_cast<int>(views.size()))
    throw std::invalid_argument("bank does not match the partition");
  VectorXd x(pd.size() + qd.size());
  x << pd, qd;
  RegionTargets out(views.size());
  for (std::size_t k = 0; k < views.size(); ++k) {
    if (!bank.trained[k])
      throw std::runtime_error("predictor bank has untrained models for region " +
                               views[k].region_id);
    int dim = coupling_dim(views[k]);
    CouplingTargets tg;
    tg.cons = VectorXd::Zero(dim);
    tg.lam = VectorXd::Zero(dim);
    if (bank.two_level) {
      tg.z = VectorXd::Zero(dim);
      tg.Lam = VectorXd::Zero(dim);
    }
    if (dim > 0) {
      VectorXd xin = bank.normalize ? bank.input_norms[k].encode(x) : x;
      int nq = quantity_count(bank.two_level);
      for (int q = 0; q < nq; ++q) {
        VectorXd y = fnn_forward(bank.models[k][static_cast<std::size_t>(q)], xin);
        if (bank.normalize)
          y = bank.out_norms[k][static_cast<std::size_t>(q)].decode(y);
        insert_quantity(tg, static_cast<Quantity>(q), y);
      }
    }
    out[k] = std::move(tg);
  }
  return out;
}

// --- serialization ---

inline nlohmann::json fnn_to_json(const Fnn& net) {
  auto mat = [](const MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  auto vec = [](const VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
  };
  return {{"W1", mat(net.W1)}, {"b1", vec(net.b1)}, {"W2", mat(net.W2)},
          {"b2", vec(net.b2)}};
}

inline Fnn fnn_from_json(const nlohmann::json& doc) {
  auto mat = [](const nlohmann::json& rows) {
    MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j].get<double>();
    return m;
  };
  auto vec = [](const nlohmann::json& arr) {
    VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr[i].get<double>();
    return v;
  };
  Fnn net;
  net.W1 = mat(doc.at("W1"));
  net.b1 = vec(doc.at("b1"));
  net.W2 = mat(doc.at("W2"));
  net.b2 = vec(doc.at("b2"));
  return net;
}

inline void save_bank(const PredictorBank& bank,
                      const std::vector<RegionView>& views,
                      const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto vec = [](const VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
  };
  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["two_level"] = bank.two_level;
  manifest["normalize"] = bank.normalize;
  manifest["out_offset"] = bank.out_offset;
  manifest["regions"] = nlohmann::json::array();
  for (std::size_t k = 0; k < views.size(); ++k) {
    manifest["regions"].push_back(views[k].region_id);
    manifest["input_mean"][views[k].region_id] = vec(bank.input_norms[k].mean);
    manifest["input_std"][views[k].region_id] = vec(bank.input_norms[k].stdev);
    int nq = quantity_count(bank.two_level);
    for (int q = 0; q < nq; ++q) {
      nlohmann::json doc;
      doc["version"] = 1;
      doc["region"] = views[k].region_id;
      doc["quantity"] = quantity_name(static_cast<Quantity>(q));
      doc["model"] = fnn_to_json(bank.models[k][static_cast<std::size_t>(q)]);
      if (bank.normalize && bank.models[k][static_cast<std::size_t>(q)].n_out() > 0) {
        doc["out_mean"] = vec(bank.out_norms[k][static_cast<std::size_t>(q)].mean);
        doc["out_std"] = vec(bank.out_norms[k][static_cast<std::size_t>(q)].stdev);
      }
      std::ofstream out(dir + "/model_" + views[k].region_id + "_" +
                        quantity_name(static_cast<Quantity>(q)) + ".json");
      out << doc.dump() << "\n";
    }
  }
  std::ofstream out(dir + "/bank.json");
  out << manifest.dump(2) << "\n";
}

inline PredictorBank load_bank(const std::vector<RegionView>& views,
                               const std::string& dir) {
  std::ifstream in(dir + "/bank.json");
  if (!in) throw std::runtime_error("cannot open bank manifest in " + dir);
  nlohmann::json manifest;
  in >> manifest;
  PredictorBank bank;
  bank.two_level = manifest.at("two_level").get<bool>();
  bank.normalize = manifest.at("normalize").get<bool>();
  bank.out_offset = manifest.at("out_offset").get<double>();
  auto vec = [](const nlohmann::json& arr) {
    VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr[i].get<double>();
    return v;
  };
  int nq = quantity_count(bank.two_level);
  bank.models.resize(views.size());
  bank.out_norms.resize(views.size());
  bank.input_norms.resize(views.size());
  bank.trained.assign(views.size(), true);
  for (std::size_t k = 0; k < views.size(); ++k) {
    bank.input_norms[k].mean = vec(manifest.at("input_mean").at(views[k].region_id));
    bank.input_norms[k].stdev = vec(manifest.at("input_std").at(views[k].region_id));
    bank.out_norms[k].resize(static_cast<std::size_t>(nq));
    for (int q = 0; q < nq; ++q) {
      std::ifstream min(dir + "/model_" + views[k].region_id + "_" +
                        quantity_name(static_cast<Quantity>(q)) + ".json");
      if (!min)
        throw std::runtime_error("missing model file for region " +
                                 views[k].region_id);
      nlohmann::json doc;
      min >> doc;
      bank.models[k].push_back(fnn_from_json(doc.at("model")));
      if (doc.contains("out_mean")) {
        Normalizer& norm = bank.out_norms[k][static_cast<std::size_t>(q)];
        norm.mean = vec(doc.at("out_mean"));
        norm.stdev = vec(doc.at("out_std"));
        norm.offset = bank.out_offset;
      }
    }
  }
  return bank;
}

inline std::string curves_to_csv(const std::vector<std::vector<TrainCurve>>& curves,
                                 const std::vector<RegionView>& views,
                                 bool two_level) {
  std::string out = "region,quantity,epoch,loss\n";
  for (std::size_t k = 0; k < curves.size(); ++k)
    for (std::size_t q = 0; q < curves[k].size(); ++q)
      for (std::size_t e = 0; e < curves[k][q].epoch_loss.size(); ++e) {
        out += views[k].region_id;
        out += ",";
        out += quantity_name(static_cast<Quantity>(q));
        out += "," + std::to_string(e + 1) + ",";
        format_double(out, curves[k][q].epoch_loss[e]);
        out += "\n";
      }
  (void)two_level;
  return out;
}

}  // namespace gridmm
