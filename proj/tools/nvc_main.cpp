// nvc: train, encode, decode and evaluate with the toy video codec.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 hash/format mismatch,
// 1 anything else.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "config.hpp"
#include "nvc/bytes.hpp"
#include "nvc/checkpoint.hpp"
#include "nvc/error.hpp"
#include "nvc/ingest.hpp"
#include "nvc/metrics.hpp"
#include "nvc/sequence.hpp"
#include "nvc/sweep.hpp"
#include "nvc/synthetic.hpp"
#include "nvc/train.hpp"

namespace fs = std::filesystem;
using namespace nvc;

namespace {

std::vector<VideoSequence> load_corpus(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("training data " + dir + " is not a directory");
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir)) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  std::vector<VideoSequence> corpus;
  for (const auto& p : entries) {
    const auto ext = p.extension().string();
    if (fs::is_directory(p) || ext == ".y4m" || ext == ".rgb") corpus.push_back(ingest(p.string()));
  }
  if (corpus.empty()) throw DataError("no videos (*.y4m, *.rgb or PNG directories) in " + dir);
  return corpus;
}

int cmd_train(const std::string& config, const std::string& data, int synthetic, const std::string& init,
              const std::string& out) {
  const TrainConfig cfg = config.empty() ? TrainConfig{} : cli::load_train_config(config);
  const std::vector<VideoSequence> corpus =
      synthetic > 0 ? moving_shapes_corpus(synthetic, 32, 32, std::max(cfg.unroll, 8), cfg.seed) : load_corpus(data);
  auto model = init.empty() ? ModelSet::create(cfg.seed) : ModelSet::load(init);
  train(*model, cfg, corpus, [](const StepLog& s) {
    if (s.step % 10 == 0) {
      std::printf("stage %d step %4d epoch %3d lr %.2e loss %.5f (d1 %.4f warp %.4f rs %.4f rt %.4f)\n",
                  static_cast<int>(s.stage), s.step, s.epoch, s.lr, s.terms.value, s.terms.distortion, s.terms.warp,
                  s.terms.rate_intra, s.terms.rate_inter);
      std::fflush(stdout);
    }
  });
  save_checkpoint(out, *model);
  std::printf("wrote %s (hash %s)\n", out.c_str(), hex64(model->hash()).c_str());
  return 0;
}

int cmd_encode(const std::string& ckpt, const std::string& input, int gop, const std::string& out) {
  const auto model = ModelSet::load(ckpt);
  const VideoSequence video = ingest(input);
  CodecConfig cfg;
  cfg.gop = gop;
  const EncodeResult r = encode_sequence(video, *model, cfg);
  write_file(out, r.container.serialize());
  for (std::size_t i = 0; i < r.stats.size(); ++i) {
    std::printf("frame %3zu %c %7zu bytes %.4f bpp\n", i, static_cast<char>(r.stats[i].type), r.stats[i].bytes,
                r.stats[i].bpp);
  }
  std::printf("%zu frames, mean %.4f bpp\n", r.stats.size(), r.mean_bpp());
  return 0;
}

int cmd_decode(const std::string& ckpt, const std::string& input, const std::string& out) {
  const auto model = ModelSet::load(ckpt);
  const auto bytes = read_file(input);
  VideoSequence seq;
  // Everything is decoded before the first file is written.
  seq.frames = decode_sequence(bytes, *model);
  write_png_sequence(out, seq);
  std::printf("decoded %zu frames into %s\n", seq.frames.size(), out.c_str());
  return 0;
}

int cmd_eval(const std::string& ref, const std::string& dec, const std::string& bitstream, const std::string& report) {
  const VideoSequence a = ingest(ref);
  const VideoSequence b = ingest(dec);
  if (a.frames.size() != b.frames.size()) {
    throw DataError("eval: " + std::to_string(a.frames.size()) + " reference frames vs " +
                    std::to_string(b.frames.size()) + " decoded frames");
  }
  std::vector<double> rates;
  if (!bitstream.empty()) {
    const Container c = Container::parse(read_file(bitstream));
    if (c.frames.size() != a.frames.size()) throw DataError("eval: bitstream frame count differs from the video");
    for (std::size_t i = 0; i < c.frames.size(); ++i) {
      rates.push_back(8.0 * static_cast<double>(c.frame_bytes(i)) / (static_cast<double>(c.width) * c.height));
    }
  }
  fs::create_directories(report);
  std::ostringstream csv;
  csv << "frame,ms_ssim,ms_ssim_db" << (rates.empty() ? "" : ",rate_bpp") << "\n";
  double total = 0, total_rate = 0;
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    const double m = ms_ssim(a.frames[i], b.frames[i]);
    total += m;
    char line[128];
    std::snprintf(line, sizeof line, "%zu,%.6f,%.6f", i, m, to_db(m));
    csv << line;
    if (!rates.empty()) {
      std::snprintf(line, sizeof line, ",%.6f", rates[i]);
      csv << line;
      total_rate += rates[i];
    }
    csv << "\n";
  }
  const std::string text = csv.str();
  write_file((fs::path(report) / "frames.csv").string(),
             {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  const double n = static_cast<double>(a.frames.size());
  std::printf("mean MS-SSIM %.6f (%.3f dB)", total / n, to_db(total / n));
  if (!rates.empty()) std::printf(", mean rate %.4f bpp", total_rate / n);
  std::printf("\n");
  return 0;
}

int cmd_bdrate(const std::string& anchor, const std::string& test) {
  const auto a = read_rd_csv(anchor);
  const auto t = read_rd_csv(test);
  double sum = 0;
  int count = 0;
  for (const auto& [name, curve] : t) {
    const auto it = a.find(name);
    if (it == a.end()) {
      std::fprintf(stderr, "warning: no anchor curve for %s\n", name.c_str());
      continue;
    }
    const double bd = bd_rate(it->second, curve);
    std::printf("%s %.4f%%\n", name.c_str(), bd);
    sum += bd;
    ++count;
  }
  if (count == 0) throw DataError("bdrate: no sequence appears in both files");
  std::printf("average %.4f%%\n", sum / count);
  return 0;
}

int cmd_sweep(const std::vector<std::string>& ckpts, const std::string& input, int gop, const std::string& report) {
  std::vector<std::unique_ptr<ModelSet>> owned;
  std::vector<const ModelSet*> models;
  for (const auto& c : ckpts) {
    owned.push_back(ModelSet::load(c));
    models.push_back(owned.back().get());
  }
  CodecConfig cfg;
  cfg.gop = gop;
  const VideoSequence video = ingest(input);
  const RDCurve curve = rd_sweep(fs::path(input).stem().string(), video, models, cfg);
  const ReportFiles files = rd_table_report({curve}, report);
  for (const RDPoint& p : curve.points) std::printf("%.4f bpp  %.6f  %.3f dB\n", p.rate, p.ms_ssim, p.db);
  std::printf("wrote %s\n", files.points_csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Toy neural video codec"};
  app.require_subcommand(1);

  std::string config, data, init, out, ckpt, input, ref, dec, report, anchor, test, bitstream;
  int gop = 8, synthetic = 0;
  std::vector<std::string> ckpts;

  auto* train_cmd = app.add_subcommand("train", "Train a model set");
  train_cmd->add_option("--config", config, "key = value training config");
  train_cmd->add_option("--data", data, "directory of training videos");
  train_cmd->add_option("--synthetic", synthetic, "train on N generated moving-shapes clips instead");
  train_cmd->add_option("--init", init, "start from this checkpoint");
  train_cmd->add_option("--out", out, "checkpoint to write")->required();

  auto* encode_cmd = app.add_subcommand("encode", "Encode a video");
  encode_cmd->add_option("--ckpt", ckpt)->required();
  encode_cmd->add_option("--input", input, "y4m file, PNG directory or raw .rgb")->required();
  encode_cmd->add_option("--gop", gop)->check(CLI::Range(1, 255));
  encode_cmd->add_option("--out", out)->required();

  auto* decode_cmd = app.add_subcommand("decode", "Decode a bitstream into PNG frames");
  decode_cmd->add_option("--ckpt", ckpt)->required();
  decode_cmd->add_option("--input", input)->required();
  decode_cmd->add_option("--out", out, "output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "MS-SSIM of decoded frames against a reference");
  eval_cmd->add_option("--ref", ref)->required();
  eval_cmd->add_option("--dec", dec)->required();
  eval_cmd->add_option("--bitstream", bitstream, "bitstream for per-frame rates");
  eval_cmd->add_option("--report", report)->required();

  auto* bd_cmd = app.add_subcommand("bdrate", "BD-rate between two rd_points.csv files");
  bd_cmd->add_option("--anchor", anchor)->required();
  bd_cmd->add_option("--test", test)->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "RD curve over several checkpoints");
  sweep_cmd->add_option("--ckpts", ckpts)->required()->delimiter(',');
  sweep_cmd->add_option("--input", input)->required();
  sweep_cmd->add_option("--gop", gop)->check(CLI::Range(1, 255));
  sweep_cmd->add_option("--report", report)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) {
      if (data.empty() == (synthetic <= 0)) throw UsageError("train: give exactly one of --data and --synthetic");
      return cmd_train(config, data, synthetic, init, out);
    }
    if (*encode_cmd) return cmd_encode(ckpt, input, gop, out);
    if (*decode_cmd) return cmd_decode(ckpt, input, out);
    if (*eval_cmd) return cmd_eval(ref, dec, bitstream, report);
    if (*bd_cmd) return cmd_bdrate(anchor, test);
    if (*sweep_cmd) return cmd_sweep(ckpts, input, gop, report);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
