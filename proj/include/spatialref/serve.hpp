#pragma once

#include <deque>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "spatialref/simulator.hpp"

namespace spatialref
{

/// Live session protocol, independent of the transport.
///
/// Client lines:
///   {"type":"force","f_h1":N,"f_h2":N}   f_h2 optional
///   {"type":"reset"}
///   {"type":"set_profile","profile":{...}}  force profile started at the current time; null clears it
///   {"type":"step","n":K}                 fast mode only, K ticks without new input
/// Server lines:
///   {"type":"state","t","s","q","zmp","inside_margin","inside_support","f_applied","f_h2_applied","failed","failure_reason","frames"}
///   {"type":"error","message"}
class ServeSession
{
public:
  ServeSession(RobotModel model, ManifoldSpec manifold, ControllerSettings controller, SimSettings sim);

  struct Command
  {
    enum class Kind
    {
      force,
      reset,
      set_profile,
      step
    };
    Kind kind = Kind::force;
    double f_h1 = 0.0;
    double f_h2 = 0.0;
    std::optional<ForceProfile> profile;
    int steps = 1;
  };

  /// Parses one line. Returns the error reply for malformed input, otherwise queues the command.
  std::optional<nlohmann::json> submit(const std::string & line);
  /// Parses without queuing; throws ConfigError on malformed input.
  static Command parse(const std::string & line);

  bool has_pending() const { return !queue_.empty(); }
  Command pop();
  /// Applies a command at a tick boundary. Returns the number of ticks it requests (fast mode).
  int apply(const Command & c);

  /// One control tick with the current force source.
  nlohmann::json tick();
  nlohmann::json state_message() const;

  const EpisodeSession & session() const { return session_; }
  double applied_force() const { return f_h1_; }

private:
  EpisodeSession session_;
  double base_f_h2_;
  double f_h1_ = 0.0;
  double f_h2_ = 0.0;
  std::optional<ForceProfile> profile_;
  double profile_start_ = 0.0;
  std::deque<Command> queue_;
};

struct ServeOptions
{
  std::string host = "127.0.0.1";
  int port = 8765;        ///< 0 picks a free port
  bool fast = false;      ///< lockstep: one tick per force message, no wall-clock pacing
  bool once = false;      ///< stop after the first client disconnects
};

/// Newline-delimited JSON over TCP, one client at a time.
class Server
{
public:
  Server(ServeSession & session, ServeOptions options);
  ~Server();
  Server(const Server &) = delete;
  Server & operator=(const Server &) = delete;

  /// Returns false (and fills `error`) if the port cannot be bound.
  bool bind(std::string & error);
  int port() const { return port_; }
  /// Accept loop; returns when `once` is set and the client left, or after stop().
  void run();
  void stop();

private:
  void serve_client(int fd);

  ServeSession & session_;
  ServeOptions options_;
  int listen_fd_ = -1;
  int port_ = 0;
  int wake_[2] = {-1, -1};
};

} // namespace spatialref
