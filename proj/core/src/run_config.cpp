#include "phase2vec/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "io_detail.hpp"
#include "phase2vec/errors.hpp"

namespace p2v {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig::RunConfig() {
  auto def = [this](const char* k, const char* v) { entries_.push_back({k, v}); };
  // shared
  def("q", "2");
  def("n", "64");
  def("c", "3");
  def("seed", "0");
  def("threads", "0");  // 0 = hardware concurrency
  // generation
  def("generator", "train-polynomial");  // | classical | conservative | incompressible | linear-stability
  def("count", "10000");
  def("per_class", "500");
  def("per_family", "10");
  // encoder
  def("conv_layers", "3");
  def("channels", "128");
  def("kernel", "3");
  def("stride", "2");
  def("embedding_dim", "0");  // 0 = 100 for q=2, 256 for q=3
  def("mlp_hidden", "128");
  def("dropout", "0.1");
  def("bn_momentum", "0.1");
  def("bn_eps", "1e-5");
  // training
  def("lr", "1e-4");
  def("epochs", "200");
  def("batch_size", "64");
  def("beta", "1e-3");
  def("eps_norm", "1e-5");
  def("norm_mode", "pointwise");  // | global | none
  def("val_fraction", "0.1");
  def("save_interval", "0");
  // lasso
  def("lasso_beta", "1e-3");
  def("lasso_max_sweeps", "1000");
  def("lasso_tol", "1e-8");
  // experiments
  def("experiment", "recon-table");  // | noise-sweep | sparsity-sweep | homoclinic | classify | resolution
  def("noise_kind", "gaussian");
  def("grid_steps", "20");
  def("noise_max", "0.3");
  def("traj_min", "10");
  def("traj_max", "2000");
  def("sigma_param", "0.1");
  def("beta_min", "1e-3");
  def("beta_max", "1e-1");
  def("sweep_n", "32");
  def("sweep_count", "256");
  def("sweep_epochs", "12");
  def("sweep_batch", "16");
  def("sweep_lr", "1e-3");
  def("xi_min", "-1.2");
  def("xi_max", "-0.8645");
  def("xi_steps", "20");
  def("homoclinic_traj", "1000");
  def("homoclinic_radius", "0.1");
  def("homoclinic_dt", "0.01");
  def("homoclinic_steps", "500");
  def("task", "linear-stability");
  def("resolutions", "32,64,128");
  def("resolution_threshold", "0.5");
  def("test_count", "16");
  // classifier protocol
  def("train_fraction", "0.8");
  def("cv_val_fraction", "0.25");
  def("cv_loo_threshold", "300");
  def("cv_kfold", "5");
}

RunConfig::Entry* RunConfig::find(const std::string& key) {
  for (auto& e : entries_)
    if (e.key == key) return &e;
  return nullptr;
}

const RunConfig::Entry* RunConfig::find(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.key == key) return &e;
  return nullptr;
}

bool RunConfig::has(const std::string& key) const { return find(key) != nullptr; }

void RunConfig::set(const std::string& key, const std::string& value) {
  Entry* e = find(key);
  if (!e) throw config_error("unknown configuration key: " + key);
  e->value = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) throw config_error("unknown configuration key: " + key);
  return e->value;
}

void RunConfig::apply_line(const std::string& line, int line_no) {
  const std::string t = trim(line);
  if (t.empty() || t[0] == '#') return;
  const auto eq = t.find('=');
  if (eq == std::string::npos)
    throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
  const std::string key = trim(t.substr(0, eq));
  const std::string value = trim(t.substr(eq + 1));
  if (key.empty()) throw config_error("config line " + std::to_string(line_no) + ": empty key");
  set(key, value);
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read config " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) cfg.apply_line(line, ++line_no);
  return cfg;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const std::int64_t r = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw config_error("key '" + key + "': expected an integer, got '" + v + "'");
  }
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw config_error("key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const std::uint64_t r = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw config_error("key '" + key + "': expected an unsigned integer, got '" + v + "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw config_error("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::string RunConfig::echo() const {
  std::vector<Entry> sorted = entries_;
  std::sort(sorted.begin(), sorted.end(),
            [](const Entry& a, const Entry& b) { return a.key < b.key; });
  std::ostringstream os;
  for (const auto& e : sorted) os << e.key << " = " << e.value << "\n";
  return os.str();
}

void RunConfig::write_echo(const std::string& path) const { detail::atomic_write(path, echo()); }

}  // namespace p2v
