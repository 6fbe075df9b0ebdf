#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spanel/bridge.hpp"
#include "spanel/encoder.hpp"
#include "spanel/error.hpp"
#include "spanel/image_io.hpp"
#include "spanel/palette.hpp"
#include "spanel/panel_json.hpp"
#include "spanel/pipeline.hpp"
#include "spanel/pseudo.hpp"
#include "spanel/render.hpp"
#include "spanel/service.hpp"
#include "spanel/tensor_io.hpp"

using namespace spanel;

namespace {

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  return read_file(path);
}

void write_output(const std::string& path, std::string_view bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes;
    std::cout.flush();
  } else {
    write_file(path, bytes);
  }
}

SemanticPanel load_panel(const std::string& path) { return panel_from_json(read_input(path)); }

std::shared_ptr<ChatProvider> make_provider(const std::string& mock_path) {
  if (!mock_path.empty()) return std::make_shared<MockChatProvider>(parse_json_text(read_file(mock_path), "llm-bridge"));
  const HttpProviderConfig config = HttpProviderConfig::from_env();
  if (config.api_key.empty() && std::getenv("SPANEL_LLM_BASE_URL") == nullptr) {
    throw Error(ErrorCode::kProvider, "service-cli",
                "no provider: pass --mock <transcript> or set SPANEL_LLM_BASE_URL / SPANEL_LLM_API_KEY");
  }
  return std::make_shared<HttpChatProvider>(config);
}

BridgeOptions bridge_options(const std::string& templates_dir) {
  BridgeOptions options;
  if (!templates_dir.empty()) options.templates = PromptTemplateSet::load_dir(templates_dir);
  return options;
}

EncoderWeights load_weights(const std::string& path, std::uint64_t seed) {
  if (!path.empty()) return decode_weights(read_file(path));
  return EncoderWeights::from_seed({}, seed);
}

std::string image_bytes(const RgbImage& image, const std::string& format, const std::string& out) {
  std::string f = format;
  if (f.empty()) f = std::filesystem::path(out).extension() == ".ppm" ? "ppm" : "png";
  if (f == "ppm") return encode_ppm(image);
  if (f == "png") return encode_png(image);
  throw Error(ErrorCode::kInvalidArgument, "toy-renderer", "format must be png or ppm", "format");
}

std::vector<EditOp> load_ops(const std::string& path) {
  const nlohmann::json value = parse_json_text(read_input(path), "panel-edit");
  std::vector<EditOp> ops;
  if (value.is_array()) {
    for (std::size_t i = 0; i < value.size(); ++i) ops.push_back(edit_op_from_json(value[i], "ops[" + std::to_string(i) + "]"));
  } else {
    ops.push_back(edit_op_from_json(value));
  }
  return ops;
}

int report(const Error& e) {
  std::cerr << error_to_json(e).dump() << std::endl;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic panel toolkit"};
  app.require_subcommand(1);
  // --h is the image height, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");

  std::string in, out, mock, templates, log_path, op_path, weights_path, attention_out, from_path, format;
  std::string old_path, new_path, relation = "left of", base_dir, host = "127.0.0.1", data_dir, prompt;
  int w = 512, h = 512, port = 8080, n = 1, candidates = 8, outline = 2, dot_radius = 3;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  EncoderConfig enc;

  auto* gen = app.add_subcommand("gen", "Generate a panel from a text prompt");
  gen->add_option("--prompt", prompt, "Image prompt")->required();
  gen->add_option("--mock", mock, "Replay an LLM transcript instead of calling a provider");
  gen->add_option("--templates", templates, "Directory with <stage>.txt prompt templates");
  gen->add_option("--log", log_path, "Write the conversation log as JSON");
  gen->add_option("-o,--out", out, "Output panel JSON (default stdout)");

  auto* chat = app.add_subcommand("chat", "Edit a panel with a text instruction");
  chat->add_option("--in", in, "Panel JSON")->required();
  chat->add_option("--instruction", prompt, "Editing instruction")->required();
  chat->add_option("--mock", mock, "Replay an LLM transcript instead of calling a provider");
  chat->add_option("--templates", templates, "Directory with <stage>.txt prompt templates");
  chat->add_option("--log", log_path, "Write the conversation log as JSON");
  chat->add_option("-o,--out", out, "Output JSON {panel, ops} (default stdout)");

  auto* edit = app.add_subcommand("edit", "Apply edit ops to a panel");
  edit->add_option("--in", in, "Panel JSON")->required();
  edit->add_option("--op", op_path, "One op object or an array of ops")->required();
  edit->add_option("-o,--out", out, "Output panel JSON (default stdout)");

  auto* encode = app.add_subcommand("encode", "Write the condition tensor (RANC) of a panel");
  encode->add_option("--in", in, "Panel JSON")->required();
  encode->add_option("--w", w, "Image width (multiple of 8)");
  encode->add_option("--h", h, "Image height (multiple of 8)");
  encode->add_option("--weights", weights_path, "RANW weights file");
  encode->add_option("--seed", seed, "Seed for random weights when no file is given");
  encode->add_option("--attention", attention_out, "Also write the RANM attention mask here");
  encode->add_option("-o,--out", out, "Output RANC file")->required();

  auto* render = app.add_subcommand("render", "Rasterize a panel with the toy renderer");
  render->add_option("--in", in, "Panel JSON")->required();
  render->add_option("--from", from_path, "Older panel: render only its editable region anew");
  render->add_option("--w", w, "Width (multiple of 8)");
  render->add_option("--h", h, "Height (multiple of 8)");
  render->add_option("--outline", outline, "Outline thickness in pixels");
  render->add_option("--dot-radius", dot_radius, "Keypoint dot radius in pixels");
  render->add_option("--format", format, "png or ppm (default from the file extension)");
  render->add_option("-o,--out", out, "Output image")->required();

  auto* diff = app.add_subcommand("diff", "Compare two panels");
  diff->add_option("--old", old_path, "Old panel JSON")->required();
  diff->add_option("--new", new_path, "New panel JSON")->required();

  auto* validate = app.add_subcommand("validate", "Check a panel against its invariants");
  validate->add_option("--in", in, "Panel JSON")->required();

  auto* ingest = app.add_subcommand("ingest", "Turn detection records (JSONL) into panel entries");
  ingest->add_option("--in", in, "Records, one JSON per line ('-' for stdin)")->required();
  ingest->add_option("--base-dir", base_dir, "Resolve relative image/mask paths here (default: input's dir)");
  ingest->add_option("--threads", threads, "Worker threads (default: all cores)");
  ingest->add_option("-o,--out", out, "Output JSONL (default stdout)");

  auto* pseudo = app.add_subcommand("pseudo", "Generate pseudo samples with spatial relations");
  pseudo->add_option("--seed", seed, "First seed");
  pseudo->add_option("--relation", relation, "Relation, or 'all' to cycle through every relation");
  pseudo->add_option("--n", n, "Number of samples");
  pseudo->add_option("--candidates", candidates, "Candidates per sample; the best separated one is kept");
  pseudo->add_option("-o,--out", out, "Output JSONL (default stdout)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--data-dir", data_dir, "Persist sessions as JSONL files here");
  serve->add_option("--mock", mock, "Replay an LLM transcript instead of calling a provider");
  serve->add_option("--templates", templates, "Directory with <stage>.txt prompt templates");
  serve->add_option("--weights", weights_path, "RANW weights file");
  serve->add_option("--seed", seed, "Seed for random weights when no file is given");

  auto* palette = app.add_subcommand("palette", "Print the palette table");
  palette->add_option("-o,--out", out, "Output file (default stdout)");

  auto* weights = app.add_subcommand("weights", "Write seeded random encoder weights (RANW)");
  weights->add_option("--seed", seed, "Seed");
  weights->add_option("--text-dim", enc.text_dim, "Text embedding size");
  weights->add_option("--color-dim", enc.color_dim, "Color feature size");
  weights->add_option("--channels", enc.channels, "Condition channels");
  weights->add_option("-o,--out", out, "Output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto provider = make_provider(mock);
      SessionLog log;
      std::optional<Error> failure;
      SemanticPanel panel;
      try {
        panel = text_to_panel(prompt, *provider, bridge_options(templates), log);
      } catch (const Error& e) {
        failure = e;
      }
      if (!log_path.empty()) write_file(log_path, log.to_json().dump(2) + "\n");
      if (failure) return report(*failure);
      for (const auto& warning : log.warnings()) std::cerr << "warning: " << warning << "\n";
      write_output(out, panel_to_json(panel) + "\n");
    } else if (*chat) {
      auto provider = make_provider(mock);
      SessionLog log;
      const SemanticPanel panel = load_panel(in);
      std::optional<Error> failure;
      ChatEditResult result;
      try {
        result = chat_edit(panel, prompt, *provider, bridge_options(templates), log);
      } catch (const Error& e) {
        failure = e;
      }
      if (!log_path.empty()) write_file(log_path, log.to_json().dump(2) + "\n");
      if (failure) return report(*failure);
      nlohmann::ordered_json body;
      body["panel"] = panel_to_json_value(result.panel);
      body["ops"] = nlohmann::ordered_json::array();
      for (const auto& op : result.ops) body["ops"].push_back(edit_op_to_json(op));
      write_output(out, body.dump(2) + "\n");
    } else if (*edit) {
      write_output(out, panel_to_json(apply_edits(load_panel(in), load_ops(op_path))) + "\n");
    } else if (*encode) {
      const SemanticPanel panel = load_panel(in);
      const EncoderWeights ew = load_weights(weights_path, seed);
      HashEmbedder embedder(ew.config.text_dim);
      const LatentGrid grid = LatentGrid::from_image(w, h, ew.config.channels);
      write_file(out, encode_condition(assemble_condition_map(panel, grid, embedder, ew, false).data));
      if (!attention_out.empty()) {
        const auto tokens = embedder.tokenize(panel.prompt);
        write_file(attention_out, encode_attention(build_attention_mask(panel, grid.rows, grid.cols, tokens, embedder)));
      }
    } else if (*render) {
      RenderConfig config;
      config.width = w;
      config.height = h;
      config.outline = outline;
      config.dot_radius = dot_radius;
      const SemanticPanel panel = load_panel(in);
      const RgbImage image = from_path.empty() ? render_panel(panel, config)
                                               : render_edit(load_panel(from_path), panel, config);
      write_output(out, image_bytes(image, format, out));
    } else if (*diff) {
      const SemanticPanel a = load_panel(old_path);
      const SemanticPanel b = load_panel(new_path);
      nlohmann::ordered_json body;
      body["adjusted"] = diff_to_json(diff_panels(a, b));
      body["ops"] = nlohmann::ordered_json::array();
      for (const auto& op : derive_edit_ops(a, b)) body["ops"].push_back(edit_op_to_json(op));
      std::cout << body.dump(2) << "\n";
    } else if (*validate) {
      const SemanticPanel panel = panel_from_json(read_input(in), {.validate = false});
      const ValidationReport violations = validate_panel(panel);
      std::cout << report_to_json(violations).dump(2) << "\n";
      return violations.empty() ? 0 : 2;
    } else if (*ingest) {
      IngestOptions options;
      options.base_dir = base_dir;
      if (options.base_dir.empty() && in != "-") options.base_dir = std::filesystem::path(in).parent_path().string();
      std::vector<std::string> lines;
      std::istringstream ss(read_input(in));
      for (std::string line; std::getline(ss, line);) lines.push_back(line);
      std::string body;
      for (const auto& entry : ingest_lines(lines, options, threads)) body += entry_to_json(entry).dump() + "\n";
      write_output(out, body);
    } else if (*pseudo) {
      if (n < 0 || candidates < 1) throw Error(ErrorCode::kInvalidArgument, "data-pipeline", "--n must be >= 0 and --candidates >= 1");
      std::string body;
      for (int i = 0; i < n; ++i) {
        const std::uint64_t sample_seed = seed + static_cast<std::uint64_t>(i);
        const Relation rel = relation == "all" ? kAllRelations[sample_seed % std::size(kAllRelations)]
                                               : relation_from_string(relation);
        std::vector<PseudoSample> pool;
        std::vector<SemanticPanel> panels;
        for (int k = 0; k < candidates; ++k) {
          pool.push_back(gen_pseudo_sample(fnv1a(std::to_string(sample_seed) + ":" + std::to_string(k)), rel));
          panels.push_back(pool.back().panel);
        }
        const PseudoSample& best = pool[max_separation_select(panels, 1).front()];
        nlohmann::ordered_json line;
        line["seed"] = sample_seed;
        line["relation"] = to_string(best.relation);
        line["prompt"] = best.prompt;
        line["provenance"] = "pseudo";
        line["roles"] = best.roles;
        line["panel"] = panel_to_json_value(best.panel);
        body += line.dump() + "\n";
      }
      write_output(out, body);
    } else if (*serve) {
      ServiceConfig config;
      config.data_dir = data_dir;
      config.bridge = bridge_options(templates);
      config.weights = load_weights(weights_path, seed);
      try {
        config.provider = make_provider(mock);
      } catch (const Error& e) {
        std::cerr << "warning: " << e.what() << "; LLM endpoints will answer 502\n";
      }
      Service service(std::move(config));
      HttpServer server(service);
      std::cerr << "listening on http://" << host << ":" << port << "\n";
      if (!server.listen(host, port)) {
        throw Error(ErrorCode::kIo, "service-cli", "cannot listen on " + host + ":" + std::to_string(port));
      }
    } else if (*palette) {
      write_output(out, palette_to_table(build_palette()));
    } else if (*weights) {
      write_file(out, encode_weights(EncoderWeights::from_seed(enc, seed)));
    }
  } catch (const Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    return report(Error(ErrorCode::kIo, "service-cli", e.what()));
  }
  return 0;
}
