#include "csshap/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <rapidjson/document.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include "csshap/error.hpp"
#include "csshap/io.hpp"

namespace csshap {

namespace {

std::string axis_label(const std::string& name) {
  if (name == "freq_hz") return "FREQUENCY (HZ)";
  if (name == "cyclic_freq_hz") return "CYCLIC FREQUENCY (HZ)";
  if (name == "envelope_freq_hz") return "ENVELOPE FREQUENCY (HZ)";
  if (name == "time_s") return "TIME (S)";
  return name;
}

}  // namespace

std::vector<std::string> validate_json_schema(const Json& doc, const Json& schema) {
  rapidjson::Document sd;
  if (sd.Parse(schema.dump().c_str()).HasParseError()) throw FormatError("schema is not valid JSON");
  const rapidjson::SchemaDocument compiled(sd);
  rapidjson::Document dd;
  dd.Parse(doc.dump().c_str());
  rapidjson::SchemaValidator validator(compiled);
  if (dd.Accept(validator)) return {};
  rapidjson::StringBuffer where;
  validator.GetInvalidDocumentPointer().StringifyUriFragment(where);
  rapidjson::StringBuffer rule;
  validator.GetInvalidSchemaPointer().StringifyUriFragment(rule);
  return {std::string(where.GetString()) + ": violates '" + validator.GetInvalidSchemaKeyword() + "' at schema " +
          rule.GetString()};
}

std::filesystem::path schema_path(const std::string& name) {
  return std::filesystem::path(CSSHAP_SCHEMA_DIR) / name;
}

Image render_representation(const DomainRepresentation& rep) {
  switch (rep.kind()) {
    case DomainKind::kTime: {
      const auto& x = rep.as<TimeSeries>();
      return render_line_plot("SAMPLE (TIME)", "TIME (S)", "AMPLITUDE", rep.col_axis(), x.values());
    }
    case DomainKind::kFrequency: {
      const auto& s = rep.as<Spectrum>();
      std::vector<double> mag;
      for (const auto& v : s.values) mag.push_back(std::abs(v));
      return render_line_plot("SPECTRUM", "FREQUENCY (HZ)", "MAGNITUDE", s.freq_axis_hz, mag);
    }
    case DomainKind::kEnvelope: {
      const auto& e = rep.as<EnvelopeRepresentation>().envelope;
      std::vector<double> mag;
      for (const auto& v : e.values) mag.push_back(std::abs(v));
      return render_line_plot("ENVELOPE SPECTRUM", "FREQUENCY (HZ)", "MAGNITUDE", e.freq_axis_hz, mag);
    }
    case DomainKind::kTimeFrequency: {
      const auto& g = rep.as<STFTGrid>();
      HeatmapSpec h{"STFT MAGNITUDE", "TIME (S)", "FREQUENCY (HZ)", g.frame_times_s, g.freq_axis_hz,
                    Matrix<double>(g.values.rows(), g.values.cols()), false};
      for (std::size_t i = 0; i < g.values.size(); ++i) h.values.data()[i] = std::abs(g.values.data()[i]);
      return render_heatmap(h);
    }
    case DomainKind::kCyclicSpectral: {
      const auto& cs = rep.as<CSRepresentation>();
      HeatmapSpec h{"LOG10 CS MAGNITUDE", "CYCLIC FREQUENCY (HZ)", "FREQUENCY (HZ)", cs.cyclic_axis_hz,
                    cs.freq_axis_hz, Matrix<double>(cs.cs.rows(), cs.cs.cols()), false};
      for (std::size_t i = 0; i < cs.cs.size(); ++i) {
        h.values.data()[i] = std::log10(std::abs(cs.cs.data()[i]) + 1e-12);
      }
      return render_heatmap(h);
    }
  }
  throw ConfigurationError("unhandled domain");
}

void write_attribution_outputs(const AttributionMap& map, const DomainRepresentation& rep,
                               const std::filesystem::path& dir, const std::string& context_json) {
  const auto& part = map.partition;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t cc = 0; cc < part.col_cells(); ++cc) xs.push_back(part.col_cell_center(cc));
  if (part.is_grid()) {
    for (std::size_t rc = 0; rc < part.row_cells(); ++rc) ys.push_back(part.row_cell_center(rc));
  } else {
    ys.push_back(0.0);
  }
  for (std::size_t k = 0; k < map.class_count(); ++k) {
    io::write_text(dir / ("class_" + std::to_string(k) + ".csv"), attribution_csv(map, k));
    HeatmapSpec h;
    h.title = "SHAP " + to_string(map.domain) + " : " + map.class_labels[k];
    h.x_label = axis_label(part.col_axis_name);
    h.y_label = part.is_grid() ? axis_label(part.row_axis_name) : "";
    h.x_centers = xs;
    h.y_centers = ys;
    h.values = Matrix<double>(part.row_cells(), part.col_cells());
    for (std::size_t i = 0; i < map.cell_count(); ++i) h.values.data()[i] = map.values(k, i);
    write_png(render_heatmap(h), dir / ("class_" + std::to_string(k) + ".png"));
  }
  write_png(render_representation(rep), dir / "representation.png");
  io::write_text(dir / "summary.json", attribution_summary_json(map, context_json) + "\n");
}

std::filesystem::path write_study_report(const std::filesystem::path& run_dir) {
  if (!std::filesystem::is_directory(run_dir)) throw IoError("run directory not found: " + run_dir.string());
  std::ostringstream md;
  md << "# Attribution study\n\n";
  md << "Run directory: `" << run_dir.string() << "`\n\n";

  md << "## Training\n\n";
  const auto train_path = run_dir / "train_report.json";
  if (std::filesystem::exists(train_path)) {
    const Json t = Json::parse(io::read_text(train_path));
    md << "- epochs: " << t["epochs"].size() << "\n";
    md << "- final test accuracy: " << io::format_double(t["final_test_accuracy"].get<double>()) << "\n";
    md << "- train/test samples: " << t["train_size"] << " / " << t["test_size"] << "\n";
    md << "- wall clock (s): " << io::format_double(t["wall_clock_s"].get<double>()) << "\n";
    md << "- confusion matrix (rows true, columns predicted): `" << t["confusion_matrix"].dump() << "`\n\n";
  } else {
    md << "not computed\n\n";
  }

  Json schema;
  const auto spath = schema_path("attribution_summary.schema.json");
  const bool have_schema = std::filesystem::exists(spath);
  if (have_schema) schema = Json::parse(io::read_text(spath));

  for (DomainKind kind : kAllDomains) {
    const std::string name = to_string(kind);
    const auto dir = run_dir / "attribution" / name;
    md << "## Domain: " << name << "\n\n";
    const auto summary_path = dir / "summary.json";
    if (!std::filesystem::exists(summary_path)) {
      md << "not computed\n\n";
      continue;
    }
    const Json s = Json::parse(io::read_text(summary_path));
    if (have_schema) {
      const auto errors = validate_json_schema(s, schema);
      md << "Summary schema check: " << (errors.empty() ? "valid" : "INVALID") << "\n\n";
      for (const auto& e : errors) md << "- " << e << "\n";
      if (!errors.empty()) md << "\n";
    } else {
      md << "Summary schema check: schema file not found\n\n";
    }
    md << "Cells: " << s.value("cell_count", 0) << ", evaluations: " << s.value("num_evaluations", 0)
       << ", background: " << s.value("background_size", 0) << ", seed: " << s.value("seed", 0)
       << ", runtime (s): " << io::format_double(s.value("runtime_s", 0.0)) << "\n\n";
    md << "![representation](attribution/" << name << "/representation.png)\n\n";
    md << "| class | model output | base rate | sum of values | residual | tolerance | pass |\n";
    md << "|---|---|---|---|---|---|---|\n";
    const auto labels = s.value("class_labels", std::vector<std::string>{});
    for (const auto& e : s.value("efficiency", Json::array())) {
      md << "| " << e.value("class", "") << " | " << io::format_double(e.value("model_output", 0.0)) << " | "
         << io::format_double(e.value("base_rate", 0.0)) << " | " << io::format_double(e.value("sum_values", 0.0))
         << " | " << io::format_double(e.value("residual", 0.0)) << " | "
         << io::format_double(e.value("tolerance", 0.0)) << " | " << (e.value("pass", false) ? "yes" : "no")
         << " |\n";
    }
    md << "\n";
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const std::string png = "class_" + std::to_string(k) + ".png";
      md << "### " << name << " / " << labels[k] << "\n\n";
      if (std::filesystem::exists(dir / png)) {
        md << "![" << labels[k] << "](attribution/" << name << "/" << png << ")\n\n";
      } else {
        md << "not computed\n\n";
      }
    }
  }
  const auto out = run_dir / "report.md";
  io::write_text(out, md.str());
  return out;
}

}  // namespace csshap
