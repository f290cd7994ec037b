#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>

#include "hieraf/detect.hpp"
#include "hieraf/error.hpp"

extern char** environ;

namespace hieraf {

std::optional<Rect> parse_detector_response(const std::string& line) {
  if (line == "none") return std::nullopt;
  std::istringstream in(line);
  Rect r;
  std::string rest;
  if (!(in >> r.x >> r.y >> r.w >> r.h) || (in >> rest)) {
    throw IoError("malformed detector response '" + line + "'");
  }
  return r;
}

ExternalProcessDetector::ExternalProcessDetector(std::vector<std::string> argv,
                                                 std::filesystem::path scratch_dir)
    : scratch_dir_(std::move(scratch_dir)) {
  if (argv.empty()) throw IoError("external detector command is empty");
  std::filesystem::create_directories(scratch_dir_);

  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (pipe(in_pipe) != 0) throw IoError("pipe failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw IoError("pipe failed");
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

  std::vector<char*> args;
  for (auto& a : argv) args.push_back(a.data());
  args.push_back(nullptr);

  pid_t pid = -1;
  const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  if (rc != 0) {
    close(in_pipe[1]);
    close(out_pipe[0]);
    throw IoError("cannot start external detector '" + argv[0] + "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  const std::string greeting = read_line();
  const std::string expected = "hieraf-detector " + std::to_string(kProtocolVersion);
  if (greeting != expected) {
    throw IoError("external detector greeted with '" + greeting + "', expected '" + expected + "'");
  }
}

ExternalProcessDetector::~ExternalProcessDetector() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, &status, 0);
    }
  }
}

std::string ExternalProcessDetector::read_line() const {
  for (;;) {
    const auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    char buf[256];
    const ssize_t n = ::read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw IoError("external detector closed its output");
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

std::optional<Rect> ExternalProcessDetector::detect(const SensorImage& image,
                                                    const Rect& /*gt_box*/) const {
  const auto path = std::filesystem::absolute(
      scratch_dir_ / ("frame_" + std::to_string(request_id_++) + ".pgm"));
  write_pgm(path, image);
  const std::string request = path.string() + "\n";
  std::size_t written = 0;
  while (written < request.size()) {
    const ssize_t n = ::write(to_child_, request.data() + written, request.size() - written);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw IoError("cannot write to external detector");
    written += static_cast<std::size_t>(n);
  }
  const std::string response = read_line();
  std::filesystem::remove(path);
  return parse_detector_response(response);
}

}  // namespace hieraf
