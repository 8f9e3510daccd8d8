#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nvc/error.hpp"
#include "nvc/metrics.hpp"

namespace fs = std::filesystem;

namespace nvc {

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string safe_name(const std::string& name) {
  std::string s = name.empty() ? "curve" : name;
  for (char& ch : s) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  }
  return s;
}

}  // namespace

std::string rd_points_csv(const std::vector<RDCurve>& curves) {
  std::string out = "sequence,rate_bpp,ms_ssim,ms_ssim_db\n";
  for (const auto& c : curves)
    for (const auto& p : c.points) out += c.name + "," + fmt(p.rate) + "," + fmt(p.ms_ssim) + "," + fmt(p.db) + "\n";
  return out;
}

std::string bd_summary_csv(const std::vector<RDCurve>& anchors, const std::vector<RDCurve>& tests) {
  if (anchors.size() != tests.size()) throw Error("bd summary: anchor and test lists differ in length");
  std::string out = "sequence,bd_rate_percent\n";
  double total = 0;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const double bd = bd_rate(anchors[i], tests[i]);
    total += bd;
    out += tests[i].name + "," + fmt(bd, 4) + "\n";
  }
  if (!tests.empty()) out += "average," + fmt(total / static_cast<double>(tests.size()), 4) + "\n";
  return out;
}

std::string rd_svg(const RDCurve& curve, const RDCurve* anchor) {
  constexpr double W = 480, H = 360, L = 60, R = 20, T = 30, B = 50;
  std::vector<const RDCurve*> all{&curve};
  if (anchor != nullptr) all.push_back(anchor);
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto* c : all)
    for (const auto& p : c->points) {
      xmin = std::min(xmin, p.rate);
      xmax = std::max(xmax, p.rate);
      ymin = std::min(ymin, p.db);
      ymax = std::max(ymax, p.db);
    }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto sx = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
  auto sy = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << curve.name << "</text>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">rate (bpp) "
    << fmt(xmin, 4) << " - " << fmt(xmax, 4) << "</text>\n";
  s << "<text x=\"15\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 15 " << H / 2
    << ")\" text-anchor=\"middle\">MS-SSIM (dB) " << fmt(ymin, 2) << " - " << fmt(ymax, 2) << "</text>\n";
  const char* colors[] = {"#c0392b", "#2c3e50"};
  for (std::size_t k = 0; k < all.size(); ++k) {
    s << "<polyline fill=\"none\" stroke=\"" << colors[k] << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : all[k]->points) s << fmt(sx(p.rate), 2) << "," << fmt(sy(p.db), 2) << " ";
    s << "\"/>\n";
    for (const auto& p : all[k]->points) {
      s << "<circle cx=\"" << fmt(sx(p.rate), 2) << "\" cy=\"" << fmt(sy(p.db), 2) << "\" r=\"3\" fill=\""
        << colors[k] << "\"/>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

ReportFiles rd_table_report(const std::vector<RDCurve>& curves, const std::string& dir,
                            const std::vector<RDCurve>& anchors) {
  if (curves.empty()) throw Error("rd_table_report: no curves");
  if (!anchors.empty() && anchors.size() != curves.size()) {
    throw Error("rd_table_report: anchors must match curves one to one");
  }
  fs::create_directories(dir);
  ReportFiles files;
  files.points_csv = (fs::path(dir) / "rd_points.csv").string();
  write_text(files.points_csv, rd_points_csv(curves));
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const std::string path = (fs::path(dir) / (safe_name(curves[i].name) + ".svg")).string();
    write_text(path, rd_svg(curves[i], anchors.empty() ? nullptr : &anchors[i]));
    files.plots.push_back(path);
  }
  if (!anchors.empty()) {
    files.summary_csv = (fs::path(dir) / "bd_summary.csv").string();
    write_text(files.summary_csv, bd_summary_csv(anchors, curves));
  }
  return files;
}

std::map<std::string, RDCurve> read_rd_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line) || line.rfind("sequence,rate_bpp,ms_ssim", 0) != 0) {
    throw DataError(path + ": expected header sequence,rate_bpp,ms_ssim,ms_ssim_db", 0);
  }
  offset += line.size() + 1;
  std::map<std::string, RDCurve> curves;
  while (std::getline(in, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() < 3) throw DataError(path + ": malformed row '" + line + "'", offset);
    RDPoint p;
    try {
      p.rate = std::stod(cols[1]);
      p.ms_ssim = std::stod(cols[2]);
    } catch (const std::exception&) {
      throw DataError(path + ": malformed number in row '" + line + "'", offset);
    }
    p.db = to_db(p.ms_ssim);
    auto& c = curves[cols[0]];
    c.name = cols[0];
    c.points.push_back(p);
    offset += line.size() + 1;
  }
  for (auto& [name, c] : curves) {
    std::sort(c.points.begin(), c.points.end(), [](const RDPoint& a, const RDPoint& b) { return a.rate < b.rate; });
  }
  return curves;
}

}  // namespace nvc
