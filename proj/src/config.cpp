#include "soc/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "soc/error.hpp"

namespace soc {

namespace {

int parse_int(const std::string& key, const std::string& v) {
  size_t pos = 0;
  int out;
  try {
    out = std::stoi(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  return out;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  size_t pos = 0;
  unsigned long long out;
  try {
    if (v.empty() || !std::isdigit(static_cast<unsigned char>(v[0]))) throw ConfigError("");
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: bad unsigned integer for " + key + ": '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError("config: bad unsigned integer for " + key + ": '" + v + "'");
  return static_cast<uint64_t>(out);
}

double parse_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  if (key == "dim") dim = parse_int(key, value);
  else if (key == "text_dim") text_dim = parse_int(key, value);
  else if (key == "heads") heads = parse_int(key, value);
  else if (key == "num_queries") num_queries = parse_int(key, value);
  else if (key == "frames") frames = parse_int(key, value);
  else if (key == "num_encoder_layers") num_encoder_layers = parse_int(key, value);
  else if (key == "num_decoder_layers") num_decoder_layers = parse_int(key, value);
  else if (key == "num_voc_layers") num_voc_layers = parse_int(key, value);
  else if (key == "voc_structure") voc_structure = value;
  else if (key == "fusion_strategy") fusion_strategy = value;
  else if (key == "lambda_cls") lambda_cls = parse_double(key, value);
  else if (key == "lambda_l1") lambda_l1 = parse_double(key, value);
  else if (key == "lambda_giou") lambda_giou = parse_double(key, value);
  else if (key == "lambda_dice") lambda_dice = parse_double(key, value);
  else if (key == "lambda_focal") lambda_focal = parse_double(key, value);
  else if (key == "lambda_con") lambda_con = parse_double(key, value);
  else if (key == "lr") lr = parse_double(key, value);
  else if (key == "beta1") beta1 = parse_double(key, value);
  else if (key == "beta2") beta2 = parse_double(key, value);
  else if (key == "grad_clip") grad_clip = parse_double(key, value);
  else if (key == "epochs") epochs = parse_int(key, value);
  else if (key == "seed") seed = parse_u64(key, value);
  else if (key == "height") height = parse_int(key, value);
  else if (key == "width") width = parse_int(key, value);
  else if (key == "n_train") n_train = parse_int(key, value);
  else if (key == "n_val") n_val = parse_int(key, value);
  else if (key == "shapes_per_scene") shapes_per_scene = parse_int(key, value);
  else if (key == "temporal_fraction") temporal_fraction = parse_double(key, value);
  else if (key == "data_dir") data_dir = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "split") split = value;
  else throw ConfigError("config: unknown key '" + key + "'");
}

void Config::validate() const {
  auto positive = [](const char* name, int v) {
    if (v < 1) throw ConfigError(std::string("config: ") + name + " must be >= 1");
  };
  positive("dim", dim);
  positive("text_dim", text_dim);
  positive("heads", heads);
  positive("num_queries", num_queries);
  positive("frames", frames);
  positive("num_encoder_layers", num_encoder_layers);
  positive("num_decoder_layers", num_decoder_layers);
  positive("num_voc_layers", num_voc_layers);
  positive("height", height);
  positive("width", width);
  positive("n_train", n_train);
  positive("n_val", n_val);
  positive("shapes_per_scene", shapes_per_scene);
  if (dim % heads != 0) throw ConfigError("config: dim must be divisible by heads");
  if (height % 32 != 0 || width % 32 != 0) {
    throw ConfigError("config: height and width must be divisible by 32");
  }
  if (voc_structure != "none" && voc_structure != "encoder_only" &&
      voc_structure != "decoder_only" && voc_structure != "both") {
    throw ConfigError("config: voc_structure must be none|encoder_only|decoder_only|both");
  }
  if (fusion_strategy != "none" && fusion_strategy != "v2l" && fusion_strategy != "l2v" &&
      fusion_strategy != "both") {
    throw ConfigError("config: fusion_strategy must be none|v2l|l2v|both");
  }
  if (split != "train" && split != "val") throw ConfigError("config: split must be train|val");
  for (auto [name, v] : {std::pair<const char*, double>{"lambda_cls", lambda_cls},
                         {"lambda_l1", lambda_l1},
                         {"lambda_giou", lambda_giou},
                         {"lambda_dice", lambda_dice},
                         {"lambda_focal", lambda_focal},
                         {"lambda_con", lambda_con}}) {
    if (v < 0.0) throw ConfigError(std::string("config: ") + name + " must be >= 0");
  }
  if (lr <= 0.0) throw ConfigError("config: lr must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("config: beta1 must be in [0,1)");
  if (beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("config: beta2 must be in [0,1)");
  if (grad_clip < 0.0) throw ConfigError("config: grad_clip must be >= 0");
  if (epochs < 0) throw ConfigError("config: epochs must be >= 0");
  if (temporal_fraction < 0.0 || temporal_fraction > 1.0) {
    throw ConfigError("config: temporal_fraction must be in [0,1]");
  }
}

std::string Config::dump() const {
  std::ostringstream os;
  os << "dim=" << dim << "\n";
  os << "text_dim=" << text_dim << "\n";
  os << "heads=" << heads << "\n";
  os << "num_queries=" << num_queries << "\n";
  os << "frames=" << frames << "\n";
  os << "num_encoder_layers=" << num_encoder_layers << "\n";
  os << "num_decoder_layers=" << num_decoder_layers << "\n";
  os << "num_voc_layers=" << num_voc_layers << "\n";
  os << "voc_structure=" << voc_structure << "\n";
  os << "fusion_strategy=" << fusion_strategy << "\n";
  os << "lambda_cls=" << lambda_cls << "\n";
  os << "lambda_l1=" << lambda_l1 << "\n";
  os << "lambda_giou=" << lambda_giou << "\n";
  os << "lambda_dice=" << lambda_dice << "\n";
  os << "lambda_focal=" << lambda_focal << "\n";
  os << "lambda_con=" << lambda_con << "\n";
  os << "lr=" << lr << "\n";
  os << "beta1=" << beta1 << "\n";
  os << "beta2=" << beta2 << "\n";
  os << "grad_clip=" << grad_clip << "\n";
  os << "epochs=" << epochs << "\n";
  os << "seed=" << seed << "\n";
  os << "height=" << height << "\n";
  os << "width=" << width << "\n";
  os << "n_train=" << n_train << "\n";
  os << "n_val=" << n_val << "\n";
  os << "shapes_per_scene=" << shapes_per_scene << "\n";
  os << "temporal_fraction=" << temporal_fraction << "\n";
  os << "data_dir=" << data_dir << "\n";
  os << "out_dir=" << out_dir << "\n";
  os << "checkpoint=" << checkpoint << "\n";
  os << "split=" << split << "\n";
  return os.str();
}

Config Config::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string s = trim(line);
    size_t hash = s.find('#');
    if (hash != std::string::npos) s = trim(s.substr(0, hash));
    if (s.empty()) continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key=value: '" + s + "'");
    }
    cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

}  // namespace soc
