#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace grft::nn {

using Mat = Eigen::MatrixXd;

/// Named parameter tensors with matching gradient accumulators and free-form string metadata.
class ParamStore {
 public:
  /// Throws std::invalid_argument on a duplicate name.
  std::size_t add(const std::string& name, Mat value);

  std::size_t size() const { return values_.size(); }
  std::size_t index(const std::string& name) const;
  bool contains(const std::string& name) const { return lookup_.count(name) != 0; }
  const std::string& name(std::size_t i) const { return names_[i]; }

  Mat& value(std::size_t i) { return values_[i]; }
  const Mat& value(std::size_t i) const { return values_[i]; }
  Mat& grad(std::size_t i) { return grads_[i]; }
  const Mat& grad(std::size_t i) const { return grads_[i]; }

  void zero_grad();
  double grad_norm() const;
  std::size_t parameter_count() const;

  std::map<std::string, std::string>& metadata() { return metadata_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  bool operator==(const ParamStore& other) const;

  /// "GRFTPAR" magic, u32 version, u32 n, per tensor {u32 name_len, name, u32 rows, u32 cols,
  /// f64 x rows*cols column-major}, u32 m, per entry {u32 len, key, u32 len, value}.
  void save(const std::filesystem::path& path) const;
  static ParamStore load(const std::filesystem::path& path);

 private:
  std::vector<std::string> names_;
  std::vector<Mat> values_;
  std::vector<Mat> grads_;
  std::map<std::string, std::size_t> lookup_;
  std::map<std::string, std::string> metadata_;
};

}  // namespace grft::nn
