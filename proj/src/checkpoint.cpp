#include "gstrument/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "gstrument/errors.hpp"
#include "gstrument/tensor_io.hpp"

namespace gstrument::toy {
namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::string tensor_name(const std::string& net, std::size_t layer, const char* part) {
  return net + "." + std::to_string(layer) + "." + part + ".gstm";
}

}  // namespace

const ToyNet& Checkpoint::net(const std::string& name) const {
  auto it = nets.find(name);
  if (it == nets.end()) throw NotFound("checkpoint has no network '" + name + "'");
  return it->second;
}

const std::string& Checkpoint::value(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw NotFound("checkpoint has no entry '" + key + "'");
  return it->second;
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  namespace fs = std::filesystem;
  auto tmp = dir;
  tmp += ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  std::ostringstream manifest;
  for (const auto& [k, v] : ckpt.meta) {
    require(k.find('=') == std::string::npos && v.find('\n') == std::string::npos, "bad metadata entry " + k);
    manifest << "meta." << k << '=' << v << '\n';
  }
  for (const auto& [name, net] : ckpt.nets) {
    require(name.find_first_of(".=/") == std::string::npos, "bad network name " + name);
    manifest << "net." << name << ".sizes=";
    const auto sizes = net.sizes();
    for (std::size_t i = 0; i < sizes.size(); ++i) manifest << (i ? "," : "") << sizes[i];
    manifest << "\nnet." << name << ".activations=";
    for (std::size_t l = 0; l < net.num_layers(); ++l)
      manifest << (l ? "," : "") << to_string(net.layers()[l].activation);
    manifest << '\n';
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      write_gstm(tmp / tensor_name(name, l, "weight"), to_tensor(net.layers()[l].weight));
      write_gstm(tmp / tensor_name(name, l, "bias"), to_tensor(net.layers()[l].bias));
    }
  }
  write_file_atomic(tmp / "manifest.txt", manifest.str());
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream f(dir / "manifest.txt");
  if (!f) throw IoError("missing checkpoint manifest in " + dir.string());
  Checkpoint ckpt;
  std::map<std::string, std::vector<std::size_t>> sizes;
  std::map<std::string, std::vector<Activation>> acts;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed manifest line: " + line);
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key.rfind("meta.", 0) == 0) {
      ckpt.meta[key.substr(5)] = val;
    } else if (key.rfind("net.", 0) == 0) {
      const auto dot = key.rfind('.');
      const std::string name = key.substr(4, dot - 4), field = key.substr(dot + 1);
      if (field == "sizes") {
        for (const auto& s : split_csv(val)) sizes[name].push_back(std::stoul(s));
      } else if (field == "activations") {
        for (const auto& s : split_csv(val)) acts[name].push_back(parse_activation(s));
      } else {
        throw IoError("unknown manifest field: " + key);
      }
    } else {
      throw IoError("unknown manifest key: " + key);
    }
  }
  for (const auto& [name, sz] : sizes) {
    if (!acts.count(name) || acts[name].size() + 1 != sz.size())
      throw IoError("network '" + name + "' has inconsistent manifest entries");
    std::mt19937_64 unused(0);
    ToyNet net(sz, acts[name], unused);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      auto& layer = net.layers()[l];
      const Eigen::MatrixXd w = to_matrix(read_gstm(dir / tensor_name(name, l, "weight")));
      const Eigen::MatrixXd b = to_matrix(read_gstm(dir / tensor_name(name, l, "bias")));
      if (w.rows() != layer.weight.rows() || w.cols() != layer.weight.cols() || b.rows() != layer.bias.size())
        throw IoError("tensor shape mismatch for network '" + name + "'");
      layer.weight = w;
      layer.bias = b.col(0);
    }
    ckpt.nets.emplace(name, std::move(net));
  }
  return ckpt;
}

}  // namespace gstrument::toy
