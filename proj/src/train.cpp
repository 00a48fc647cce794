#include "deltanet/train.hpp"

#include "deltanet/checkpoint.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace deltanet {

void TrainConfig::validate() const {
  arch.validate();
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr > 0)) throw std::invalid_argument("lr must be > 0");
  if (subset_n && *subset_n < 1) throw std::invalid_argument("subset_n must be >= 1");
  if (test_subset_n && *test_subset_n < 1) throw std::invalid_argument("test_subset_n must be >= 1");
  if (eval_fmp_passes < 1) throw std::invalid_argument("eval_fmp_passes must be >= 1");
  if (arch.classnum != dataset_classes(dataset)) {
    throw std::invalid_argument("classnum " + std::to_string(arch.classnum) + " does not match " +
                                std::string(dataset_name(dataset)));
  }
}

std::string format_epoch(const EpochStats& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "epoch=%d loss=%.6f train_acc=%.4f test_acc=%.4f secs=%.2f",
                e.epoch, e.loss, e.train_acc, e.test_acc, e.secs);
  return buf;
}

namespace {

int argmax_row(const Tensor<float>::ConstMatrixMap& m, Index row) {
  Index best = 0;
  for (Index k = 1; k < m.cols(); ++k) {
    if (m(row, k) > m(row, best)) best = k;
  }
  return static_cast<int>(best);
}

}  // namespace

double evaluate(Network<float>& net, const Dataset& data, int fmp_passes, Index batch_size) {
  if (net.classnum() != data.classes()) {
    throw std::invalid_argument("network has " + std::to_string(net.classnum()) +
                                " classes, dataset " + std::string(dataset_name(data.name)) +
                                " has " + std::to_string(data.classes()));
  }
  if (fmp_passes < 1) throw std::invalid_argument("fmp_passes must be >= 1");
  bool has_fmp = false;
  for (const auto& l : net.layers()) has_fmp |= l.kind == LayerKind::Fmp;
  const int passes = has_fmp ? fmp_passes : 1;

  Rng unused(0);
  Index correct = 0;
  BatchIterator it(data, batch_size, false, unused);
  while (auto batch = it.next()) {
    Tensor<float> logits = net.forward(batch->images, ForwardMode::eval(0), unused);
    for (int p = 1; p < passes; ++p) {
      logits.array() += net.forward(batch->images, ForwardMode::eval(p), unused).array();
    }
    const auto m = std::as_const(logits).matrix();
    for (Index i = 0; i < m.rows(); ++i) {
      correct += argmax_row(m, i) == batch->labels[static_cast<std::size_t>(i)];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                  std::ostream* log) {
  cfg.validate();
  TrainResult result{Network<float>(cfg.arch, cfg.seed, cfg.dropout), {}};
  Network<float>& net = result.network;
  Rng shuffle_rng(Rng::derive(cfg.seed, streams::kShuffle));
  Rng forward_rng(Rng::derive(cfg.seed, streams::kTrainForward));
  const AdamConfig adam{cfg.lr};

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    double loss_sum = 0;
    Index correct = 0;
    BatchIterator it(train_set, cfg.batch_size, true, shuffle_rng);
    ForwardCache<float> cache;
    while (auto batch = it.next()) {
      const Tensor<float> logits = net.forward(batch->images, ForwardMode::train(), forward_rng, &cache);
      const auto xent = softmax_xent(logits, batch->labels);
      net.backward(cache, xent.grad_logits);
      adam_step(net.params(), adam);

      const auto n = static_cast<double>(batch->labels.size());
      loss_sum += static_cast<double>(xent.loss) * n;
      const auto m = logits.matrix();
      for (Index i = 0; i < m.rows(); ++i) {
        correct += argmax_row(m, i) == batch->labels[static_cast<std::size_t>(i)];
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / static_cast<double>(train_set.size());
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    stats.test_acc = evaluate(net, test_set, cfg.eval_fmp_passes, cfg.batch_size);
    stats.secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(stats);
    if (stats.test_acc > result.history.best_test_acc) {
      result.history.best_test_acc = stats.test_acc;
      result.history.best_epoch = epoch;
      if (!cfg.checkpoint.empty()) save_checkpoint(net.params(), cfg.checkpoint);
    }
    if (log) *log << format_epoch(stats) << std::endl;
  }
  return result;
}

std::pair<Dataset, Dataset> load_datasets(const TrainConfig& cfg) {
  Dataset train_set = load_cifar(cfg.dataset, cfg.data_dir, Split::Train);
  Dataset test_set = load_cifar(cfg.dataset, cfg.data_dir, Split::Test);
  if (cfg.subset_n) train_set = train_set.head(*cfg.subset_n);
  if (cfg.test_subset_n) test_set = test_set.head(*cfg.test_subset_n);
  return {std::move(train_set), std::move(test_set)};
}

TrainResult train(const TrainConfig& cfg, std::ostream* log) {
  cfg.validate();
  auto [train_set, test_set] = load_datasets(cfg);
  return train(cfg, train_set, test_set, log);
}

}  // namespace deltanet
