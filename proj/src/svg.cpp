#include "fricest/svg.hpp"

#include <sstream>

#include "fricest/io.hpp"

namespace fricest::svg {

std::string escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace {
std::string num(double v) {
  // Two decimals are plenty for pixel coordinates.
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}
}  // namespace

Document::Document(double width, double height) : w_(width), h_(height) {}

void Document::desc_json(const std::string& json) { desc_ = json; }

void Document::line(double x1, double y1, double x2, double y2,
                    const std::string& stroke, double width) {
  std::ostringstream s;
  s << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\""
    << num(x2) << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke
    << "\" stroke-width=\"" << width << "\"/>";
  body_.push_back(s.str());
}

void Document::rect(double x, double y, double w, double h,
                    const std::string& fill, const std::string& stroke) {
  std::ostringstream s;
  s << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
    << num(w) << "\" height=\"" << num(h) << "\" fill=\"" << fill
    << "\" stroke=\"" << stroke << "\"/>";
  body_.push_back(s.str());
}

void Document::polyline(const std::vector<std::pair<double, double>>& pts,
                        const std::string& stroke, double width) {
  std::ostringstream s;
  s << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
    << width << "\" points=\"";
  for (const auto& [x, y] : pts) s << num(x) << "," << num(y) << " ";
  s << "\"/>";
  body_.push_back(s.str());
}

void Document::text(double x, double y, const std::string& content,
                    const std::string& anchor, int size,
                    const std::string& fill) {
  std::ostringstream s;
  s << "<text x=\"" << num(x) << "\" y=\"" << num(y)
    << "\" font-family=\"sans-serif\" font-size=\"" << size
    << "\" text-anchor=\"" << anchor << "\" fill=\"" << fill << "\">"
    << escape(content) << "</text>";
  body_.push_back(s.str());
}

std::string Document::str() const {
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_
    << "\" height=\"" << h_ << "\" viewBox=\"0 0 " << w_ << " " << h_
    << "\">\n";
  if (!desc_.empty()) s << "<desc>" << escape(desc_) << "</desc>\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << w_ << "\" height=\"" << h_
    << "\" fill=\"#ffffff\"/>\n";
  for (const auto& e : body_) s << e << "\n";
  s << "</svg>\n";
  return s.str();
}

void Document::save(const std::filesystem::path& path) const {
  io::atomic_write(path, str());
}

}  // namespace fricest::svg
