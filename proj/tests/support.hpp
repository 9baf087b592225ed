#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "pcl/corpus.hpp"
#include "pcl/models/common.hpp"
#include "pcl/text_prep.hpp"

namespace pcl::test {

// Temporary directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 10000; ++i) {
      auto candidate = base / (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline ParagraphRecord record(const std::string& par_id, const std::string& keyword,
                              const std::string& text, int raw_label, int cutoff = 2) {
  ParagraphRecord r;
  r.par_id = par_id;
  r.art_id = "a" + par_id;
  r.keyword = keyword;
  r.country_code = "us";
  r.text = text;
  r.raw_label = raw_label;
  r.binary_label = raw_label >= cutoff ? 1 : 0;
  return r;
}

// Maximum guarded relative error between analytic gradients and central finite
// differences over every parameter entry. Models must run without dropout so
// train and eval paths coincide.
inline double max_gradient_error(Classifier& model, const EncodedData& data,
                                 const std::vector<int>& index, const std::vector<int>& labels,
                                 double step = 1e-5) {
  model.params().zero_grad();
  model.forward_backward(data, index, labels);
  std::vector<Eigen::MatrixXd> analytic;
  for (const auto& t : model.params().tensors()) analytic.push_back(t.grad);

  auto loss_at = [&]() {
    const Eigen::MatrixXd probs = model.forward(data, index, Mode::Eval);
    return cross_entropy(probs, labels);
  };

  double worst = 0;
  for (std::size_t ti = 0; ti < model.params().tensors().size(); ++ti) {
    auto& value = model.params().tensors()[ti].value;
    for (Eigen::Index i = 0; i < value.rows(); ++i) {
      for (Eigen::Index j = 0; j < value.cols(); ++j) {
        const double saved = value(i, j);
        value(i, j) = saved + step;
        const double up = loss_at();
        value(i, j) = saved - step;
        const double down = loss_at();
        value(i, j) = saved;
        const double numeric = (up - down) / (2 * step);
        const double a = analytic[ti](i, j);
        const double rel =
            std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-4});
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

// 32-example corpus where one bigram ("save life" vs plain filler) perfectly
// separates the classes.
inline std::vector<ParagraphRecord> toy_separable_corpus() {
  const std::vector<std::string> fillers = {"the city report", "a quiet morning",
                                            "council meeting notes", "weather was mild"};
  std::vector<ParagraphRecord> records;
  int id = 0;
  auto next_id = [&id]() {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "p%02d", id++);
    return std::string(buf);
  };
  for (int i = 0; i < 16; ++i) {
    const auto& filler = fillers[static_cast<std::size_t>(i) % fillers.size()];
    records.push_back(record(next_id(), "homeless", "please save life today " + filler, 4));
    records.push_back(record(next_id(), "homeless", filler + " nothing notable here", 0));
  }
  return records;
}

}  // namespace pcl::test
