#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "dice/errors.hpp"
#include "dice/experiment.hpp"

#ifndef DICE_VERSION
#define DICE_VERSION "0.1.0"
#endif

namespace dice {

std::string to_string(Method m) {
  switch (m) {
    case Method::fbp: return "fbp";
    case Method::pnp_fista: return "pnp_fista";
    case Method::dice: return "dice";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  if (text == "fbp") return Method::fbp;
  if (text == "pnp_fista") return Method::pnp_fista;
  if (text == "dice") return Method::dice;
  throw ConfigError("unknown method '" + text + "' (expected fbp, pnp_fista or dice)");
}

std::string version_string() { return DICE_VERSION; }

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// shortest text that parses back to the same double
std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class T>
T parse_number(const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ConfigError("'" + text + "' is not a valid number");
  return value;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("'" + text + "' is not a boolean");
}

template <class T>
std::string join(const std::vector<T>& items, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + f(items[i]);
  return out;
}

struct Field {
  const char* section;
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define DICE_NUM(sec, name, member, type)                                                          \
  Field {                                                                                          \
    sec, name, [](ExperimentConfig& c, const std::string& v) { c.member = parse_number<type>(v); }, \
        [](const ExperimentConfig& c) {                                                            \
          if constexpr (std::is_floating_point_v<type>)                                            \
            return fmt(c.member);                                                                  \
          else                                                                                     \
            return std::to_string(c.member);                                                       \
        }                                                                                          \
  }
#define DICE_BOOL(sec, name, member)                                                                                 \
  Field {                                                                                                            \
    sec, name, [](ExperimentConfig& c, const std::string& v) { c.member = parse_bool(v); },                          \
        [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }                           \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"input", "phantom", [](ExperimentConfig& c, const std::string& v) { c.phantom = v; },
       [](const ExperimentConfig& c) { return c.phantom; }},
      DICE_NUM("input", "count", phantom_count, int),
      {"input", "dir", [](ExperimentConfig& c, const std::string& v) { c.input_dir = v; },
       [](const ExperimentConfig& c) { return c.input_dir.string(); }},
      DICE_NUM("input", "image_side", image_side, int),

      {"geometry", "pattern",
       [](ExperimentConfig& c, const std::string& v) {
         c.patterns.clear();
         for (const auto& s : split_list(v)) {
           try {
             c.patterns.push_back(parse_pattern_kind(s));
           } catch (const ContractError& e) {
             throw ConfigError(e.what());
           }
         }
       },
       [](const ExperimentConfig& c) {
         return join<PatternKind>(c.patterns, [](const PatternKind& k) { return to_string(k); });
       }},
      {"geometry", "views",
       [](ExperimentConfig& c, const std::string& v) {
         c.views.clear();
         for (const auto& s : split_list(v)) c.views.push_back(parse_number<int>(s));
       },
       [](const ExperimentConfig& c) {
         return join<int>(c.views, [](const int& n) { return std::to_string(n); });
       }},
      DICE_NUM("geometry", "noise_sigma", noise_sigma, double),

      {"method", "name",
       [](ExperimentConfig& c, const std::string& v) {
         c.methods.clear();
         for (const auto& s : split_list(v)) c.methods.push_back(parse_method(s));
       },
       [](const ExperimentConfig& c) {
         return join<Method>(c.methods, [](const Method& m) { return to_string(m); });
       }},

      DICE_NUM("dice", "rho", rho, double),
      DICE_NUM("dice", "tau1", tau1, double),
      DICE_NUM("dice", "K", K, int),
      DICE_NUM("dice", "P", P, int),
      DICE_NUM("dice", "T_steps", T_steps, int),
      DICE_NUM("dice", "T", T, int),
      {"dice", "schedule",
       [](ExperimentConfig& c, const std::string& v) {
         try {
           c.schedule = parse_schedule_kind(v);
         } catch (const ContractError& e) {
           throw ConfigError(e.what());
         }
       },
       [](const ExperimentConfig& c) { return to_string(c.schedule); }},
      DICE_NUM("dice", "beta1", beta1, double),
      DICE_NUM("dice", "betaT", betaT, double),
      {"dice", "denoiser", [](ExperimentConfig& c, const std::string& v) { c.denoiser = v; },
       [](const ExperimentConfig& c) { return c.denoiser; }},
      DICE_NUM("dice", "lambda_tv", lambda_tv, double),
      DICE_NUM("dice", "tv_iters", tv_iters, int),
      DICE_NUM("dice", "prior_mean", prior_mean, double),
      DICE_NUM("dice", "prior_var", prior_var, double),
      DICE_BOOL("dice", "warm_start_ce", warm_start_ce),
      DICE_BOOL("dice", "warm_start_cg", warm_start_cg),

      DICE_NUM("fista", "lambda", fista_lambda, double),
      DICE_NUM("fista", "iters", fista_iters, int),
      DICE_NUM("fista", "tv_iters", fista_tv_iters, int),
      {"fista", "step",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "auto")
           c.fista_step.reset();
         else
           c.fista_step = parse_number<double>(v);
       },
       [](const ExperimentConfig& c) { return c.fista_step ? fmt(*c.fista_step) : std::string("auto"); }},

      {"fbp", "window",
       [](ExperimentConfig& c, const std::string& v) {
         try {
           c.fbp_window = parse_filter_window(v);
         } catch (const ContractError& e) {
           throw ConfigError(e.what());
         }
       },
       [](const ExperimentConfig& c) { return to_string(c.fbp_window); }},

      DICE_NUM("run", "seed", seed, std::uint64_t),
      DICE_NUM("run", "workers", workers, int),
      {"run", "out", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
       [](const ExperimentConfig& c) { return c.out_dir.string(); }},
      DICE_BOOL("run", "record_timing", record_timing),
      DICE_BOOL("run", "write_images", write_images),

      {"sweep", "axis", [](ExperimentConfig& c, const std::string& v) { c.sweep_axis = v; },
       [](const ExperimentConfig& c) { return c.sweep_axis; }},
      {"sweep", "values",
       [](ExperimentConfig& c, const std::string& v) {
         c.sweep_values.clear();
         for (const auto& s : split_list(v)) c.sweep_values.push_back(parse_number<double>(s));
       },
       [](const ExperimentConfig& c) {
         return join<double>(c.sweep_values, [](const double& x) { return fmt(x); });
       }},
  };
  return table;
}

#undef DICE_NUM
#undef DICE_BOOL

void set_field(ExperimentConfig& cfg, const std::string& section, const std::string& key, const std::string& value,
               const std::string& origin) {
  for (const auto& f : fields()) {
    if (section == f.section && key == f.key) {
      try {
        f.set(cfg, trim(value));
      } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + section + "." + key + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError(origin + ": unknown key '" + section + "." + key + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) { throw ConfigError(key + ": " + why); };
  if (input_dir.empty()) {
    if (phantom != "shepp_logan" && phantom != "ellipses" && phantom != "disk")
      fail("input.phantom", "expected shepp_logan, ellipses or disk");
    if (phantom_count < 1) fail("input.count", "must be >= 1");
  }
  if (image_side < 11) fail("input.image_side", "must be >= 11 (SSIM window)");
  if (patterns.empty()) fail("geometry.pattern", "empty list");
  if (views.empty()) fail("geometry.views", "empty list");
  for (int v : views) {
    if (v < 1 || v > kFullViewCount) fail("geometry.views", "each count must lie in [1, 180]");
    for (auto p : patterns)
      if (p == PatternKind::uniform && kFullViewCount % v != 0)
        fail("geometry.views", std::to_string(v) + " does not divide 180 (uniform pattern)");
  }
  if (!(noise_sigma >= 0.0)) fail("geometry.noise_sigma", "must be >= 0");
  if (methods.empty()) fail("method.name", "empty list");
  if (!(rho > 0.0 && rho < 1.0)) fail("dice.rho", "must lie in (0, 1)");
  if (!(tau1 > 0.0 && tau1 < 1.0)) fail("dice.tau1", "must lie in (0, 1)");
  if (K < 1) fail("dice.K", "must be >= 1");
  if (P < 1) fail("dice.P", "must be >= 1");
  if (T < 1) fail("dice.T", "must be >= 1");
  if (T_steps < 1 || T_steps > T) fail("dice.T_steps", "must lie in [1, T]");
  if (!(beta1 > 0.0 && beta1 <= betaT && betaT < 1.0)) fail("dice.beta1", "need 0 < beta1 <= betaT < 1");
  if (denoiser != "tv") fail("dice.denoiser", "only 'tv' is available for reconstruction");
  if (!(lambda_tv > 0.0)) fail("dice.lambda_tv", "must be > 0");
  if (tv_iters < 1) fail("dice.tv_iters", "must be >= 1");
  if (!(prior_var > 0.0)) fail("dice.prior_var", "must be > 0");
  if (!(fista_lambda >= 0.0)) fail("fista.lambda", "must be >= 0");
  if (fista_iters < 1) fail("fista.iters", "must be >= 1");
  if (fista_tv_iters < 1) fail("fista.tv_iters", "must be >= 1");
  if (fista_step && !(*fista_step > 0.0)) fail("fista.step", "must be > 0 or auto");
  if (workers < 1) fail("run.workers", "must be >= 1");
  if (out_dir.empty()) fail("run.out", "empty path");
  const std::vector<std::string> axes{"rho", "tau1", "K", "P", "T_steps"};
  if (std::find(axes.begin(), axes.end(), sweep_axis) == axes.end())
    fail("sweep.axis", "expected one of rho, tau1, K, P, T_steps");
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(origin + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(origin + ": key '" + section + "' is outside any section");
    for (const auto& [key, value] : body) set_field(cfg, section, key, value.data(), origin);
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  set_field(cfg, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
            assignment.substr(eq + 1), "--override");
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("--override: ") + e.what());
  }
}

std::string to_ini(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string current;
  for (const auto& f : fields()) {
    if (current != f.section) {
      if (!current.empty()) out << '\n';
      current = f.section;
      out << '[' << current << "]\n";
    }
    out << f.key << " = " << f.get(cfg) << '\n';
  }
  return out.str();
}

}  // namespace dice
