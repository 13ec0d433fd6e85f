#include "bp/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bp/io.hpp"

namespace bp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::invalid_argument("config: key '" + key + "': expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return static_cast<int>(x);
  } catch (...) {
    throw std::invalid_argument("config: key '" + key + "': expected an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::invalid_argument("config: key '" + key + "': expected an unsigned integer, got '" +
                                v + "'");
  }
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& v,
                          T (*item)(const std::string&, const std::string&)) {
  std::vector<T> out;
  std::istringstream is(v);
  std::string part;
  while (std::getline(is, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(item(key, part));
  }
  if (out.empty()) throw std::invalid_argument("config: key '" + key + "': empty list");
  return out;
}

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;

// One setter per known "[section].key"; anything else is a typo.
std::map<std::string, Setter> build_schema() {
  std::map<std::string, Setter> s;
  s["backbone.side"] = [](Config& c, const std::string& k, const std::string& v) {
    c.backbone.side = parse_int(k, v);
    c.backbone.input_dim = c.backbone.side * c.backbone.side;
  };
  s["backbone.hidden_dim"] = [](Config& c, const std::string& k, const std::string& v) {
    c.backbone.hidden_dim = parse_int(k, v);
  };
  s["backbone.hidden_layers"] = [](Config& c, const std::string& k, const std::string& v) {
    c.backbone.hidden_layers = parse_int(k, v);
  };
  s["backbone.context_tokens"] = [](Config& c, const std::string& k, const std::string& v) {
    c.backbone.context_tokens = parse_int(k, v);
  };
  s["backbone.context_dim"] = [](Config& c, const std::string& k, const std::string& v) {
    c.backbone.context_dim = parse_int(k, v);
  };
  s["backbone.time_dim"] = [](Config& c, const std::string& k, const std::string& v) {
    c.backbone.time_dim = parse_int(k, v);
  };
  s["backbone.attn_dim"] = [](Config& c, const std::string& k, const std::string& v) {
    c.backbone.attn_dim = parse_int(k, v);
  };
  s["backbone.pretrain_steps"] = [](Config& c, const std::string& k, const std::string& v) {
    c.backbone.pretrain_steps = parse_int(k, v);
  };
  s["backbone.pretrain_batch"] = [](Config& c, const std::string& k, const std::string& v) {
    c.backbone.pretrain_batch = parse_int(k, v);
  };
  s["backbone.pretrain_lr"] = [](Config& c, const std::string& k, const std::string& v) {
    c.backbone.pretrain_lr = parse_double(k, v);
  };
  s["backbone.seed"] = [](Config& c, const std::string& k, const std::string& v) {
    c.backbone.seed = parse_u64(k, v);
  };
  s["backbone.encoder_hidden"] = [](Config& c, const std::string& k, const std::string& v) {
    c.encoder_hidden = parse_int(k, v);
  };
  s["backbone.token_dim"] = [](Config& c, const std::string& k, const std::string& v) {
    c.token_dim = parse_int(k, v);
  };

  s["data.veil_alpha"] = [](Config& c, const std::string& k, const std::string& v) {
    c.degradation.veil_alpha = parse_double(k, v);
  };
  s["data.gamma"] = [](Config& c, const std::string& k, const std::string& v) {
    c.degradation.gamma = parse_double(k, v);
  };
  s["data.blur_sigma"] = [](Config& c, const std::string& k, const std::string& v) {
    c.degradation.blur_sigma = parse_double(k, v);
  };
  s["data.stripe_amplitude"] = [](Config& c, const std::string& k, const std::string& v) {
    c.degradation.stripe_amplitude = parse_double(k, v);
  };

  s["train.trajectory"] = [](Config& c, const std::string&, const std::string& v) {
    c.train.trajectory = trajectory_from_name(v);
  };
  s["train.variant"] = [](Config& c, const std::string&, const std::string& v) {
    c.train.variant = variant_from_name(v);
  };
  s["train.degradation"] = [](Config& c, const std::string&, const std::string& v) {
    c.train.kind = degradation_from_name(v);
  };
  s["train.iterations"] = [](Config& c, const std::string& k, const std::string& v) {
    c.train.iterations = parse_int(k, v);
  };
  s["train.batch_size"] = [](Config& c, const std::string& k, const std::string& v) {
    c.train.batch_size = parse_int(k, v);
  };
  s["train.learning_rate"] = [](Config& c, const std::string& k, const std::string& v) {
    c.train.learning_rate = parse_double(k, v);
  };
  s["train.weight_decay"] = [](Config& c, const std::string& k, const std::string& v) {
    c.train.weight_decay = parse_double(k, v);
  };
  s["train.t0"] = [](Config& c, const std::string& k, const std::string& v) {
    c.train.t0 = parse_double(k, v);
  };
  s["train.eta"] = [](Config& c, const std::string& k, const std::string& v) {
    c.train.eta = parse_double(k, v);
  };
  s["train.dataset_size"] = [](Config& c, const std::string& k, const std::string& v) {
    c.train.dataset_size = parse_int(k, v);
  };
  s["train.seed"] = [](Config& c, const std::string& k, const std::string& v) {
    c.train.seed = parse_u64(k, v);
  };

  s["sampler.steps"] = [](Config& c, const std::string& k, const std::string& v) {
    c.sampler.steps = parse_int(k, v);
  };
  s["sampler.t0"] = [](Config& c, const std::string& k, const std::string& v) {
    c.sampler.t0 = parse_double(k, v);
  };
  s["sampler.naive_start"] = [](Config& c, const std::string& k, const std::string& v) {
    c.sampler.naive_start = parse_double(k, v);
  };
  s["sampler.ddbm_start"] = [](Config& c, const std::string& k, const std::string& v) {
    c.sampler.ddbm_start = parse_double(k, v);
  };
  s["sampler.eta"] = [](Config& c, const std::string& k, const std::string& v) {
    c.sampler.eta = parse_double(k, v);
  };
  s["sampler.seed"] = [](Config& c, const std::string& k, const std::string& v) {
    c.sampler.seed = parse_u64(k, v);
  };

  s["experiment.seeds"] = [](Config& c, const std::string& k, const std::string& v) {
    c.experiment.seeds = parse_list<std::uint64_t>(k, v, parse_u64);
  };
  s["experiment.test_count"] = [](Config& c, const std::string& k, const std::string& v) {
    c.experiment.test_count = parse_int(k, v);
  };
  s["experiment.test_seed"] = [](Config& c, const std::string& k, const std::string& v) {
    c.experiment.test_seed = parse_u64(k, v);
  };
  s["experiment.t0_candidates"] = [](Config& c, const std::string& k, const std::string& v) {
    c.experiment.t0_candidates = parse_list<double>(k, v, parse_double);
  };
  s["experiment.diag_samples"] = [](Config& c, const std::string& k, const std::string& v) {
    c.experiment.diag_samples = parse_int(k, v);
  };
  s["experiment.diag_draws"] = [](Config& c, const std::string& k, const std::string& v) {
    c.experiment.diag_draws = parse_int(k, v);
  };
  return s;
}

}  // namespace

Config default_config() { return Config{}; }

Config parse_config(const std::string& text) {
  static const std::map<std::string, Setter> schema = build_schema();
  Config cfg;
  cfg.raw_text = text;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section header at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected 'key = value' at line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    auto it = schema.find(full);
    if (it == schema.end()) throw std::invalid_argument("config: unknown key '" + full + "'");
    it->second(cfg, full, value);
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  Config cfg = parse_config(read_text_file(path));
  if (const char* env = std::getenv("BRIDGEPROMPT_SEED")) {
    const std::uint64_t seed = parse_u64("BRIDGEPROMPT_SEED", env);
    cfg.backbone.seed = seed;
    cfg.train.seed = seed;
    cfg.sampler.seed = seed;
  }
  return cfg;
}

namespace {
// %g keeps the document readable; parsing restores the exact defaults
std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}
}  // namespace

std::string default_config_text() {
  const Config c;
  std::ostringstream os;
  os << "# default configuration; every key shown with its default value\n"
     << "[backbone]\n"
     << "side = " << c.backbone.side << "\n"
     << "hidden_dim = " << c.backbone.hidden_dim << "\n"
     << "hidden_layers = " << c.backbone.hidden_layers << "\n"
     << "context_tokens = " << c.backbone.context_tokens << "\n"
     << "context_dim = " << c.backbone.context_dim << "\n"
     << "time_dim = " << c.backbone.time_dim << "\n"
     << "attn_dim = " << c.backbone.attn_dim << "\n"
     << "pretrain_steps = " << c.backbone.pretrain_steps << "\n"
     << "pretrain_batch = " << c.backbone.pretrain_batch << "\n"
     << "pretrain_lr = " << short_num(c.backbone.pretrain_lr) << "\n"
     << "encoder_hidden = " << c.encoder_hidden << "\n"
     << "token_dim = " << c.token_dim << "\n"
     << "seed = " << c.backbone.seed << "\n\n"
     << "[data]\n"
     << "veil_alpha = " << short_num(c.degradation.veil_alpha) << "\n"
     << "gamma = " << short_num(c.degradation.gamma) << "\n"
     << "blur_sigma = " << short_num(c.degradation.blur_sigma) << "\n"
     << "stripe_amplitude = " << short_num(c.degradation.stripe_amplitude) << "\n\n"
     << "[train]\n"
     << "trajectory = " << trajectory_name(c.train.trajectory) << "\n"
     << "variant = " << variant_name(c.train.variant) << "\n"
     << "degradation = " << degradation_name(c.train.kind) << "\n"
     << "iterations = " << c.train.iterations << "\n"
     << "batch_size = " << c.train.batch_size << "\n"
     << "learning_rate = " << short_num(c.train.learning_rate) << "\n"
     << "weight_decay = " << short_num(c.train.weight_decay) << "\n"
     << "t0 = " << short_num(c.train.t0) << "\n"
     << "eta = " << short_num(c.train.eta) << "\n"
     << "dataset_size = " << c.train.dataset_size << "\n"
     << "seed = " << c.train.seed << "\n\n"
     << "[sampler]\n"
     << "steps = " << c.sampler.steps << "\n"
     << "t0 = " << short_num(c.sampler.t0) << "\n"
     << "naive_start = " << short_num(c.sampler.naive_start) << "\n"
     << "ddbm_start = " << short_num(c.sampler.ddbm_start) << "\n"
     << "eta = " << short_num(c.sampler.eta) << "\n"
     << "seed = " << c.sampler.seed << "\n\n"
     << "[experiment]\n"
     << "seeds = 1,2,3\n"
     << "test_count = " << c.experiment.test_count << "\n"
     << "test_seed = " << c.experiment.test_seed << "\n"
     << "t0_candidates = 0.1,0.2,0.3,0.4,0.5,0.6\n"
     << "diag_samples = " << c.experiment.diag_samples << "\n"
     << "diag_draws = " << c.experiment.diag_draws << "\n";
  return os.str();
}

}  // namespace bp
