#include "tomdistill/backend.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "tomdistill/formats.hpp"

extern char** environ;

namespace tomdistill {

namespace {

constexpr std::string_view kInput = "{input}";
constexpr std::string_view kLeft = "{left}";
constexpr std::string_view kRight = "{right}";
constexpr std::string_view kOutput = "{output}";

bool contains(std::string_view s, std::string_view needle) {
  return s.find(needle) != std::string_view::npos;
}

[[noreturn]] void backend_fail(std::string_view key, const std::string& what) {
  throw BackendError("backend key '" + std::string(key) + "': " + what);
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

std::string substitute(
    std::string text,
    const std::vector<std::pair<std::string_view, std::string>>& bindings) {
  for (const auto& [placeholder, value] : bindings) {
    const std::string quoted = shell_quote(value);
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
      text.replace(pos, placeholder.size(), quoted);
      pos += quoted.size();
    }
  }
  return text;
}

// Owns a mkdtemp directory for one invocation.
class ScratchDir {
 public:
  ScratchDir() {
    std::string pattern =
        (fs::temp_directory_path() / "tomdistill.XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) {
      throw BackendError(std::string("cannot create temp dir: ") +
                         std::strerror(errno));
    }
    path_ = pattern;
  }
  ~ScratchDir() {
    std::error_code ignored;
    fs::remove_all(path_, ignored);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string tail_of(const fs::path& log, std::size_t max_bytes = 400) {
  std::ifstream in(log, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (text.size() > max_bytes) text = "..." + text.substr(text.size() - max_bytes);
  return text;
}

// Runs `command` under /bin/sh with stdout and stderr captured in `log`.
// Returns the wait status.
int run_shell(const std::string& command, const fs::path& log) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null",
                                   O_RDONLY, 0);
  std::string sh = "/bin/sh";
  std::string dash_c = "-c";
  std::string cmd = command;
  char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, sh.c_str(), &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw BackendError(std::string("posix_spawn failed: ") + std::strerror(rc));
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) {
      throw BackendError(std::string("waitpid failed: ") + std::strerror(errno));
    }
  }
  return status;
}

ScalarMap run_external(const BackendSpec& spec, std::string_view key,
                       const std::vector<std::pair<std::string_view, const RgbImage*>>& inputs,
                       Extent expected) {
  ScratchDir scratch;
  std::vector<std::pair<std::string_view, std::string>> bindings;
  for (const auto& [placeholder, image] : inputs) {
    std::string name(placeholder.substr(1, placeholder.size() - 2));
    const fs::path file = scratch.path() / (name + ".png");
    write_rgb_png(*image, file);
    bindings.emplace_back(placeholder, file.string());
  }
  const fs::path output = scratch.path() / "output.pfm";
  bindings.emplace_back(kOutput, output.string());
  const fs::path log = scratch.path() / "log.txt";

  const int status = run_shell(substitute(spec.location(), bindings), log);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    std::ostringstream msg;
    if (WIFEXITED(status)) {
      msg << "command exited with status " << WEXITSTATUS(status);
    } else {
      msg << "command terminated abnormally";
    }
    const std::string diag = tail_of(log);
    if (!diag.empty()) msg << "; output: " << diag;
    backend_fail(key, msg.str());
  }
  if (!fs::exists(output)) backend_fail(key, "command wrote no output PFM");
  ScalarMap map = [&] {
    try {
      return read_pfm(output, spec.output_space());
    } catch (const Error& e) {
      backend_fail(key, e.what());
    }
  }();
  if (map.extent() != expected) {
    std::ostringstream msg;
    msg << "output is " << map.width() << "x" << map.height()
        << ", input is " << expected.width << "x" << expected.height;
    backend_fail(key, msg.str());
  }
  return map;
}

ScalarMap read_precomputed(const BackendSpec& spec, std::string_view key,
                           Extent expected) {
  const fs::path file = fs::path(spec.location()) / (std::string(key) + ".pfm");
  if (!fs::is_regular_file(file)) {
    backend_fail(key, "no prediction file " + file.string());
  }
  ScalarMap map = [&] {
    try {
      return read_pfm(file, spec.output_space());
    } catch (const Error& e) {
      backend_fail(key, e.what());
    }
  }();
  if (map.extent() != expected) {
    std::ostringstream msg;
    msg << "prediction is " << map.width() << "x" << map.height()
        << ", input is " << expected.width << "x" << expected.height;
    backend_fail(key, msg.str());
  }
  return map;
}

}  // namespace

BackendSpec BackendSpec::precomputed_dir(std::filesystem::path dir,
                                         MapSpace output_space) {
  if (!fs::is_directory(dir)) {
    throw BackendError("precomputed backend: not a directory: " + dir.string());
  }
  return BackendSpec(BackendKind::kPrecomputedDir, dir.string(), output_space);
}

BackendSpec BackendSpec::external_exec(std::string command_template,
                                       MapSpace output_space) {
  const bool mono = contains(command_template, kInput);
  const bool stereo =
      contains(command_template, kLeft) && contains(command_template, kRight);
  if (!contains(command_template, kOutput) || !(mono || stereo)) {
    throw BackendError(
        "external backend: command template needs {output} and either "
        "{input} or {left}/{right}");
  }
  return BackendSpec(BackendKind::kExternalExec, std::move(command_template),
                     output_space);
}

BackendSpec BackendSpec::parse(std::string_view text, MapSpace output_space) {
  if (text.starts_with("dir:")) {
    return precomputed_dir(std::string(text.substr(4)), output_space);
  }
  if (text.starts_with("exec:")) {
    return external_exec(std::string(text.substr(5)), output_space);
  }
  throw BackendError("backend spec must start with 'dir:' or 'exec:', got '" +
                     std::string(text) + "'");
}

std::string BackendSpec::describe() const {
  return (kind_ == BackendKind::kPrecomputedDir ? "dir:" : "exec:") + location_;
}

std::string color_key(std::string_view sample_id, std::size_t color_index) {
  return std::string(sample_id) + "_c" + std::to_string(color_index);
}

std::string base_key(std::string_view sample_id) {
  return std::string(sample_id) + "_base";
}

ScalarMap infer_mono(const BackendSpec& spec, const RgbImage& image,
                     std::string_view key) {
  if (spec.kind() == BackendKind::kPrecomputedDir) {
    return read_precomputed(spec, key, image.extent());
  }
  if (!contains(spec.location(), kInput)) {
    backend_fail(key, "mono inference needs an {input} placeholder");
  }
  return run_external(spec, key, {{kInput, &image}}, image.extent());
}

ScalarMap infer_stereo(const BackendSpec& spec, const RgbImage& left,
                       const RgbImage& right, std::string_view key) {
  if (spec.output_space() != MapSpace::kDisparityPx) {
    backend_fail(key, "stereo backend must declare disparity_px output");
  }
  if (left.extent() != right.extent()) {
    backend_fail(key, "left and right images differ in size");
  }
  if (spec.kind() == BackendKind::kPrecomputedDir) {
    return read_precomputed(spec, key, left.extent());
  }
  if (!contains(spec.location(), kLeft) || !contains(spec.location(), kRight)) {
    backend_fail(key, "stereo inference needs {left} and {right} placeholders");
  }
  return run_external(spec, key, {{kLeft, &left}, {kRight, &right}},
                      left.extent());
}

}  // namespace tomdistill
