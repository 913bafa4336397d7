#include "flowbench/extractor.hpp"

#include "flowbench/serialize.hpp"

#include <fmt/format.h>

#include <fstream>

namespace flowbench {

std::string to_string(FeMethod method) {
  switch (method) {
    case FeMethod::full: return "full";
    case FeMethod::pca: return "pca";
    case FeMethod::lda: return "lda";
    case FeMethod::ae: return "ae";
  }
  return "?";
}

FeMethod parse_fe_method(std::string_view name) {
  for (auto m : {FeMethod::full, FeMethod::pca, FeMethod::lda, FeMethod::ae}) {
    if (to_string(m) == name) return m;
  }
  throw Error(fmt::format("unknown feature-extraction method '{}'", name));
}

int extracted_dims(FeMethod method, int dims, int input_dim) {
  switch (method) {
    case FeMethod::full: return input_dim;
    case FeMethod::lda: return 1;
    case FeMethod::pca:
    case FeMethod::ae: return dims;
  }
  return dims;
}

ExtractorModel fit_extractor(FeMethod method, const FeatureMatrix& train, int dims,
                             const nn::TrainConfig& ae_config) {
  switch (method) {
    case FeMethod::full: return std::monostate{};
    case FeMethod::pca: return pca_fit(train, dims);
    case FeMethod::lda: return lda_fit(train);
    case FeMethod::ae: return ae_fit(train, dims, ae_config);
  }
  throw Error("fit_extractor: unknown method");
}

FeatureMatrix apply_extractor(const ExtractorModel& model, const FeatureMatrix& m) {
  return std::visit(
      [&](const auto& fitted) -> FeatureMatrix {
        using T = std::decay_t<decltype(fitted)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return m;
        } else if constexpr (std::is_same_v<T, PcaModel>) {
          return pca_transform(m, fitted);
        } else if constexpr (std::is_same_v<T, LdaModel>) {
          return lda_transform(m, fitted);
        } else {
          return ae_encode(m, fitted);
        }
      },
      model);
}

void save_extractor(std::ostream& out, const ExtractorModel& model) {
  out << "flowbench-extractor 1\n";
  std::visit(
      [&](const auto& fitted) {
        using T = std::decay_t<decltype(fitted)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          out << "full\n";
        } else if constexpr (std::is_same_v<T, PcaModel>) {
          out << "pca " << fitted.samples << ' ';
          io::write_double(out, fitted.total_variance);
          out << '\n';
          io::write_vector(out, fitted.mean);
          io::write_matrix(out, fitted.components);
          io::write_vector(out, fitted.singular_values);
          io::write_vector(out, fitted.explained_variance);
        } else if constexpr (std::is_same_v<T, LdaModel>) {
          out << "lda " << (fitted.zero_separation ? 1 : 0) << ' ';
          io::write_double(out, fitted.output_variance);
          out << '\n';
          io::write_vector(out, fitted.projection);
          io::write_matrix(out, fitted.class_means);
        } else {
          out << "ae " << fitted.bottleneck << ' ';
          io::write_double(out, fitted.reconstruction_loss);
          out << '\n';
          nn::save_params(out, fitted.encoder);
          nn::save_params(out, fitted.decoder);
        }
      },
      model);
}

ExtractorModel load_extractor(std::istream& in) {
  io::TokenReader r(in);
  r.expect("flowbench-extractor");
  if (r.next_int() != 1) throw Error("unsupported extractor format version");
  const auto kind = r.next();
  if (kind == "full") return std::monostate{};
  if (kind == "pca") {
    PcaModel m;
    m.samples = r.next_int();
    m.total_variance = r.next_double();
    m.mean = r.next_vector();
    m.components = r.next_matrix();
    m.singular_values = r.next_vector();
    m.explained_variance = r.next_vector();
    return m;
  }
  if (kind == "lda") {
    LdaModel m;
    m.zero_separation = r.next_int() != 0;
    m.output_variance = r.next_double();
    m.projection = r.next_vector();
    m.class_means = r.next_matrix();
    return m;
  }
  if (kind == "ae") {
    AeModel m;
    m.bottleneck = static_cast<int>(r.next_int());
    m.reconstruction_loss = r.next_double();
    m.encoder = nn::load_params(in);
    m.decoder = nn::load_params(in);
    return m;
  }
  throw Error(fmt::format("unknown extractor kind '{}'", kind));
}

VarianceReport variance_report(const Matrix& extracted, VarianceMethod method, double total_input_variance) {
  if (extracted.rows() == 0) throw Error("variance_report: empty input");
  VarianceReport report;
  report.method = method;
  const Index n = extracted.rows();
  const Vector mean = extracted.colwise().mean().transpose();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  report.variance = (extracted.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() / denom;
  if (method == VarianceMethod::pca) {
    report.cumulative_fraction.resize(report.variance.size());
    double running = 0.0;
    for (Index i = 0; i < report.variance.size(); ++i) {
      running += report.variance(i);
      report.cumulative_fraction(i) = total_input_variance > 0.0 ? running / total_input_variance : 0.0;
    }
  }
  return report;
}

VarianceReport variance_report(const FeatureMatrix& extracted, VarianceMethod method, double total_input_variance) {
  return variance_report(extracted.values, method, total_input_variance);
}

void write_variance_csv(const VarianceReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path));
  out << "dimension_index,variance\n";
  for (Index i = 0; i < report.variance.size(); ++i) out << fmt::format("{},{:.12g}\n", i + 1, report.variance(i));
}

}  // namespace flowbench
