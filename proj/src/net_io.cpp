#include "collapselab/net_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/core.h>

namespace collapselab {

namespace {

using nlohmann::json;

json row_major(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Matrix matrix_from(const json& rows, Eigen::Index expect_rows, Eigen::Index expect_cols) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != expect_rows) {
    throw ShapeError("weight has the wrong number of rows");
  }
  Matrix m(expect_rows, expect_cols);
  for (Eigen::Index i = 0; i < expect_rows; ++i) {
    const json& r = rows[static_cast<std::size_t>(i)];
    if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != expect_cols) {
      throw ShapeError("weight has the wrong number of columns");
    }
    for (Eigen::Index j = 0; j < expect_cols; ++j) m(i, j) = r[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

json vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vec_from(const json& a, Eigen::Index expect) {
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != expect) {
    throw ShapeError("vector has the wrong length");
  }
  Vector v(expect);
  for (Eigen::Index i = 0; i < expect; ++i) v[i] = a[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

json to_json(const Architecture& arch) {
  return {{"input_dim", arch.input_dim},
          {"widths", arch.widths},
          {"last_layer_relu", arch.last_layer_relu},
          {"bias_free", arch.bias_free}};
}

Architecture architecture_from_json(const json& j) {
  Architecture a;
  a.input_dim = j.at("input_dim").get<int>();
  a.widths = j.at("widths").get<std::vector<int>>();
  a.last_layer_relu = j.at("last_layer_relu").get<bool>();
  a.bias_free = j.at("bias_free").get<bool>();
  a.validate();
  return a;
}

json to_json(const Network& net) {
  json layers = json::array();
  for (int l = 0; l < net.depth(); ++l) {
    const auto& p = net.params[static_cast<std::size_t>(l)];
    json layer = {{"weight", row_major(p.weight)}, {"bias", vec(p.bias)}};
    if (p.gain.size() > 0) layer["gain"] = vec(p.gain);
    if (p.bn_scale.size() > 0) {
      const auto& s = net.bn_stats[static_cast<std::size_t>(l)];
      layer["bn_scale"] = vec(p.bn_scale);
      layer["bn_shift"] = vec(p.bn_shift);
      layer["running_mean"] = vec(s.running_mean);
      layer["running_var"] = vec(s.running_var);
    }
    layers.push_back(std::move(layer));
  }
  return {{"architecture", to_json(net.arch)},
          {"layers", layers},
          {"activation", std::string(to_string(net.activation))},
          {"normalization",
           {{"mode", std::string(to_string(net.norm.mode))},
            {"dropout_rate", net.norm.dropout_rate}}}};
}

Network network_from_json(const json& j) {
  try {
    Network net = Network::zeros(architecture_from_json(j.at("architecture")),
                                 parse_activation(j.at("activation").get<std::string>()));
    net.norm.mode = parse_norm_mode(j.at("normalization").at("mode").get<std::string>());
    net.norm.dropout_rate = j.at("normalization").value("dropout_rate", 0.0);
    const json& layers = j.at("layers");
    if (!layers.is_array() || static_cast<int>(layers.size()) != net.depth()) {
      throw ShapeError("layer count does not match the architecture");
    }
    for (int l = 0; l < net.depth(); ++l) {
      const json& lj = layers[static_cast<std::size_t>(l)];
      auto& p = net.params[static_cast<std::size_t>(l)];
      const int rows = net.arch.widths[l];
      p.weight = matrix_from(lj.at("weight"), rows, net.arch.fan_in(l));
      p.bias = vec_from(lj.at("bias"), rows);
      if (lj.contains("gain")) p.gain = vec_from(lj.at("gain"), rows);
      if (lj.contains("bn_scale")) {
        auto& s = net.bn_stats[static_cast<std::size_t>(l)];
        p.bn_scale = vec_from(lj.at("bn_scale"), rows);
        p.bn_shift = vec_from(lj.at("bn_shift"), rows);
        s.running_mean = vec_from(lj.at("running_mean"), rows);
        s.running_var = vec_from(lj.at("running_var"), rows);
      }
    }
    validate(net);
    return net;
  } catch (const json::exception& e) {
    throw ShapeError(fmt::format("malformed network document: {}", e.what()));
  }
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ShapeError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
  // A train report embeds the network under "final_net".
  if (j.contains("final_net")) return network_from_json(j.at("final_net"));
  return network_from_json(j);
}

json to_json(const InitializerSpec& spec) {
  return {{"scheme", std::string(to_string(spec.scheme))},
          {"bias_mode", std::string(to_string(spec.bias_mode))},
          {"weight_gain", spec.weight_gain},
          {"bias_variance", spec.bias_variance},
          {"seed", spec.seed},
          {"sign_flip", spec.sign_flip}};
}

InitializerSpec initializer_spec_from_json(const json& j) {
  InitializerSpec s;
  s.scheme = parse_scheme(j.at("scheme").get<std::string>());
  s.bias_mode = parse_bias_mode(j.value("bias_mode", std::string("zero")));
  s.weight_gain = j.value("weight_gain", 2.0);
  s.bias_variance = j.value("bias_variance", 1.0);
  s.seed = j.value("seed", std::uint64_t{0});
  s.sign_flip = j.value("sign_flip", false);
  return s;
}

json to_json(const TrainReport& r) {
  json traj = json::array();
  for (const auto& [step, loss] : r.trajectory) {
    traj.push_back({{"step", step}, {"loss", std::isfinite(loss) ? json(loss) : json(nullptr)}});
  }
  return {{"final_loss", std::isfinite(r.final_loss) ? json(r.final_loss) : json(nullptr)},
          {"diverged", r.diverged},
          {"steps_run", r.steps_run},
          {"trajectory", traj},
          {"collapse", to_json(r.collapse)},
          {"final_net", to_json(r.final_net)}};
}

}  // namespace collapselab
