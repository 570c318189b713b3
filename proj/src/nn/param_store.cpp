#include "grft/nn/param_store.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace grft::nn {

namespace {

constexpr char kMagic[8] = {'G', 'R', 'F', 'T', 'P', 'A', 'R', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& f, std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }
void put_str(std::ofstream& f, const std::string& s) {
  put_u32(f, static_cast<std::uint32_t>(s.size()));
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  if (!f.read(reinterpret_cast<char*>(&v), 4)) throw std::runtime_error("checkpoint: truncated");
  return v;
}
std::string get_str(std::ifstream& f) {
  const std::uint32_t n = get_u32(f);
  if (n > (1u << 24)) throw std::runtime_error("checkpoint: implausible string length");
  std::string s(n, '\0');
  if (!f.read(s.data(), n)) throw std::runtime_error("checkpoint: truncated");
  return s;
}

}  // namespace

std::size_t ParamStore::add(const std::string& name, Mat value) {
  if (lookup_.count(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  lookup_[name] = names_.size();
  names_.push_back(name);
  grads_.push_back(Mat::Zero(value.rows(), value.cols()));
  values_.push_back(std::move(value));
  return names_.size() - 1;
}

std::size_t ParamStore::index(const std::string& name) const {
  auto it = lookup_.find(name);
  if (it == lookup_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& g : grads_) g.setZero();
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& g : grads_) s += g.squaredNorm();
  return std::sqrt(s);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (names_ != other.names_ || metadata_ != other.metadata_) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const Mat& a = values_[i];
    const Mat& b = other.values_[i];
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (a.size() > 0 && std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) != 0) {
      return false;
    }
  }
  return true;
}

void ParamStore::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path.string());
  f.write(kMagic, sizeof kMagic);
  put_u32(f, kVersion);
  put_u32(f, static_cast<std::uint32_t>(values_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i) {
    put_str(f, names_[i]);
    put_u32(f, static_cast<std::uint32_t>(values_[i].rows()));
    put_u32(f, static_cast<std::uint32_t>(values_[i].cols()));
    f.write(reinterpret_cast<const char*>(values_[i].data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(values_[i].size())));
  }
  put_u32(f, static_cast<std::uint32_t>(metadata_.size()));
  for (const auto& [k, v] : metadata_) {
    put_str(f, k);
    put_str(f, v);
  }
  if (!f) throw std::runtime_error("checkpoint write failed: " + path.string());
}

ParamStore ParamStore::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  if (!f.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  const std::uint32_t version = get_u32(f);
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  ParamStore store;
  const std::uint32_t n = get_u32(f);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = get_str(f);
    const std::uint32_t rows = get_u32(f);
    const std::uint32_t cols = get_u32(f);
    if (static_cast<std::uint64_t>(rows) * cols > (1ull << 28)) throw std::runtime_error("checkpoint: tensor too large");
    Mat m(rows, cols);
    if (!f.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * rows * cols))) {
      throw std::runtime_error("checkpoint: truncated");
    }
    store.add(name, std::move(m));
  }
  const std::uint32_t m = get_u32(f);
  for (std::uint32_t i = 0; i < m; ++i) {
    std::string k = get_str(f);
    store.metadata_[k] = get_str(f);
  }
  return store;
}

}  // namespace grft::nn
