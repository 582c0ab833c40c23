#include "prokd/training/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "prokd/error.hpp"

namespace prokd::train {

namespace pt = boost::property_tree;

std::string to_string(AlignmentGradient g) {
  return g == AlignmentGradient::moving_average ? "moving-average" : "straight-through";
}

namespace {

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const std::string t = trim(text);
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + text + "'");
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

template <class T>
Field number(std::string section, std::string key, T& ref) {
  const std::string full = section + "." + key;
  return {section, key, [&ref, full](const std::string& s) { ref = parse_number<T>(full, s); },
          [&ref] {
            if constexpr (std::is_floating_point_v<T>) return fmt(ref);
            else return std::to_string(ref);
          }};
}

Field flag(std::string section, std::string key, bool& ref) {
  const std::string full = section + "." + key;
  return {section, key, [&ref, full](const std::string& s) { ref = parse_bool(full, s); },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

Field text(std::string section, std::string key, std::string& ref) {
  return {section, key, [&ref](const std::string& s) { ref = trim(s); }, [&ref] { return ref; }};
}

template <class T>
Field list(std::string section, std::string key, std::vector<T>& ref) {
  const std::string full = section + "." + key;
  return {section, key,
          [&ref, full](const std::string& s) {
            ref.clear();
            for (const auto& item : split(s, ',')) ref.push_back(parse_number<T>(full, item));
          },
          [&ref] {
            std::string out;
            for (std::size_t i = 0; i < ref.size(); ++i) {
              if (i) out += ", ";
              if constexpr (std::is_floating_point_v<T>) out += fmt(ref[i]);
              else out += std::to_string(ref[i]);
            }
            return out;
          }};
}

std::vector<Field> fields(RunConfig& c, std::string& shift_text) {
  auto& s = c.synthetic;
  auto& e = c.encoder;
  return {
      number("run", "seed", c.seed),
      list("run", "seeds", c.seeds),
      number("run", "batch_size", c.batch_size),
      number("run", "max_length", c.max_length),
      flag("data", "synthetic", c.data.synthetic),
      {"data", "entity_types",
       [&c](const std::string& v) { c.data.entity_types = split(v, ','); },
       [&c] {
         std::string out;
         for (std::size_t i = 0; i < c.data.entity_types.size(); ++i)
           out += (i ? "," : "") + c.data.entity_types[i];
         return out;
       }},
      text("data", "source_train", c.data.source_train),
      text("data", "source_dev", c.data.source_dev),
      text("data", "target_train", c.data.target_train),
      text("data", "target_test", c.data.target_test),
      number("synthetic", "seed", s.seed),
      number("synthetic", "vocabulary_size", s.vocabulary_size),
      number("synthetic", "num_templates", s.num_templates),
      number("synthetic", "source_train", s.source_train),
      number("synthetic", "source_dev", s.source_dev),
      number("synthetic", "source_test", s.source_test),
      number("synthetic", "target_train", s.target_train),
      number("synthetic", "target_test", s.target_test),
      number("synthetic", "entity_density", s.entity_density),
      number("synthetic", "function_word_fraction", s.function_word_fraction),
      number("synthetic", "cues_per_type", s.cues_per_type),
      number("synthetic", "cue_rate", s.cue_rate),
      number("synthetic", "min_template_length", s.min_template_length),
      number("synthetic", "max_template_length", s.max_template_length),
      number("synthetic", "function_cipher_rate", s.function_cipher_rate),
      number("synthetic", "entity_cipher_rate", s.entity_cipher_rate),
      number("synthetic", "cipher_seed", s.cipher_seed),
      number("synthetic", "shift_sentence_rate", s.shift_sentence_rate),
      text("synthetic", "source_language", s.source_language),
      text("synthetic", "target_language", s.target_language),
      text("synthetic", "shift", shift_text),
      number("encoder", "embedding_dim", e.embedding_dim),
      number("encoder", "hidden_dim", e.hidden_dim),
      number("encoder", "window_radius", e.window_radius),
      number("encoder", "dropout", e.dropout),
      flag("encoder", "freeze_embeddings", e.freeze_embeddings),
      number("teacher", "learning_rate", c.teacher.learning_rate),
      number("teacher", "epochs", c.teacher.epochs),
      number("teacher", "alignment_warmup", c.teacher.alignment_warmup),
      {"teacher", "alignment_gradient",
       [&c](const std::string& v) {
         const auto t = trim(v);
         if (t == "moving-average") c.teacher.gradient = AlignmentGradient::moving_average;
         else if (t == "straight-through") c.teacher.gradient = AlignmentGradient::straight_through;
         else throw ConfigError("config key 'teacher.alignment_gradient': expected moving-average or straight-through");
       },
       [&c] { return to_string(c.teacher.gradient); }},
      number("student", "learning_rate", c.student.learning_rate),
      number("student", "epochs", c.student.epochs),
      number("student", "prototype_warmup", c.student.prototype_warmup),
      number("prototypes", "lambda", c.lambda),
      flag("prototypes", "exclude_outside", c.exclude_outside),
      number("fusion", "tau1", c.fusion.tau1),
      number("fusion", "tau2", c.fusion.tau2),
      number("fusion", "gamma", c.fusion.gamma),
      {"fusion", "negatives",
       [&c](const std::string& v) { c.fusion.negatives = loss::negative_mode_from_string(trim(v)); },
       [&c] { return loss::to_string(c.fusion.negatives); }},
      {"fusion", "form", [&c](const std::string& v) { c.fusion.form = loss::alignment_form_from_string(trim(v)); },
       [&c] { return loss::to_string(c.fusion.form); }},
      flag("ablation", "no_ca", c.ablation.no_ca),
      flag("ablation", "no_st", c.ablation.no_st),
      flag("ablation", "no_pk", c.ablation.no_pk),
      flag("ablation", "no_cl", c.ablation.no_cl),
      list("grid", "lambda", c.grid.lambda),
      list("grid", "tau1", c.grid.tau1),
      list("grid", "tau2", c.grid.tau2),
      list("grid", "gamma", c.grid.gamma),
  };
}

// "surface:SOURCE_TAG:rate:TARGET_TAG:rate" entries separated by ';'.
std::vector<corpus::ShiftEntry> parse_shift(const std::string& text, const corpus::LabelScheme& scheme) {
  std::vector<corpus::ShiftEntry> out;
  for (const auto& item : split(text, ';')) {
    const auto parts = split(item, ':');
    if (parts.size() != 5)
      throw ConfigError("config key 'synthetic.shift': entry '" + item +
                        "' must be surface:SOURCE_TAG:rate:TARGET_TAG:rate");
    auto tag = [&](const std::string& t) {
      auto idx = scheme.index(t);
      if (!idx) throw ConfigError("config key 'synthetic.shift': unknown tag '" + t + "'");
      return *idx;
    };
    out.push_back({parts[0], tag(parts[1]), parse_number<double>("synthetic.shift", parts[2]), tag(parts[3]),
                   parse_number<double>("synthetic.shift", parts[4])});
  }
  return out;
}

std::string format_shift(const std::vector<corpus::ShiftEntry>& table, const corpus::LabelScheme& scheme) {
  std::string out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& e = table[i];
    if (i) out += "; ";
    out += e.surface + ":" + scheme.tag(e.source_tag) + ":" + fmt(e.source_rate) + ":" + scheme.tag(e.target_tag) +
           ":" + fmt(e.target_rate);
  }
  return out;
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.batch_size == 0) throw ConfigError("config key 'run.batch_size' must be positive");
  if (c.max_length == 0) throw ConfigError("config key 'run.max_length' must be positive");
  if (c.seeds.empty()) throw ConfigError("config key 'run.seeds' must list at least one seed");
  if (c.data.entity_types.empty()) throw ConfigError("config key 'data.entity_types' must not be empty");
  if (!c.data.synthetic &&
      (c.data.source_train.empty() || c.data.source_dev.empty() || c.data.target_train.empty()))
    throw ConfigError("file mode needs data.source_train, data.source_dev and data.target_train");
  if (!(c.teacher.learning_rate > 0.0)) throw ConfigError("config key 'teacher.learning_rate' must be positive");
  if (!(c.student.learning_rate > 0.0)) throw ConfigError("config key 'student.learning_rate' must be positive");
  if (c.teacher.epochs == 0) throw ConfigError("config key 'teacher.epochs' must be positive");
  if (c.student.epochs == 0) throw ConfigError("config key 'student.epochs' must be positive");
  if (!(c.lambda > 0.0 && c.lambda < 1.0)) throw ConfigError("config key 'prototypes.lambda' must lie in (0,1)");
  if (c.encoder.embedding_dim == 0 || c.encoder.hidden_dim == 0)
    throw ConfigError("encoder dimensions must be positive");
  if (!(c.encoder.dropout >= 0.0 && c.encoder.dropout < 1.0))
    throw ConfigError("config key 'encoder.dropout' must lie in [0,1)");
  loss::validate(c.fusion);
}

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig cfg;
  std::string shift_text;
  auto table = fields(cfg, shift_text);
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty())
      throw ConfigError("config key '" + section + "' must live inside a section");
    bool known_section = false;
    for (const auto& f : table) known_section = known_section || f.section == section;
    if (!known_section) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : keys) {
      auto it = std::find_if(table.begin(), table.end(),
                             [&](const Field& f) { return f.section == section && f.key == key; });
      if (it == table.end()) throw ConfigError("unknown config key '" + section + "." + key + "'");
      it->set(value.data());
    }
  }
  cfg.synthetic.shift_table = parse_shift(shift_text, corpus::LabelScheme(cfg.data.entity_types));
  cfg.encoder.num_tags = 2 * cfg.data.entity_types.size() + 1;
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::string shift_text = format_shift(cfg.synthetic.shift_table, corpus::LabelScheme(cfg.data.entity_types));
  const auto table = fields(copy, shift_text);
  out << "# prokd-config v1\n";
  std::string section;
  for (const auto& f : table) {
    if (f.section != section) {
      out << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
      section = f.section;
    }
    out << f.key << " = " << f.get() << '\n';
  }
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw Error("training", "cannot write config copy '" + path + "'");
  write_config(out, cfg);
}

}  // namespace prokd::train
