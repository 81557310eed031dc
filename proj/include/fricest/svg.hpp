#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace fricest::svg {

/// Escapes &, <, >, " for use in SVG text nodes and attributes.
std::string escape(const std::string& text);

/// Minimal self-contained SVG assembler: fixed canvas, no external assets.
/// The machine-readable payload of a plot goes into the <desc> element as
/// JSON; visible labels may round, the desc never does.
class Document {
 public:
  Document(double width, double height);

  void desc_json(const std::string& json);
  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke = "#333", double width = 1.0);
  void rect(double x, double y, double w, double h,
            const std::string& fill = "none",
            const std::string& stroke = "#333");
  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& stroke = "#1f77b4", double width = 1.5);
  void text(double x, double y, const std::string& content,
            const std::string& anchor = "start", int size = 11,
            const std::string& fill = "#333");

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  double w_, h_;
  std::string desc_;
  std::vector<std::string> body_;
};

}  // namespace fricest::svg
