#include "spatialref/serve.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

#include "json_util.hpp"
#include "spatialref/errors.hpp"

namespace spatialref
{

ServeSession::ServeSession(RobotModel model, ManifoldSpec manifold, ControllerSettings controller, SimSettings sim)
: session_(std::move(model), std::move(manifold), controller, sim), base_f_h2_(sim.f_h2), f_h2_(sim.f_h2)
{
}

ServeSession::Command ServeSession::parse(const std::string & line)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(line);
  }
  catch(const nlohmann::json::parse_error & e)
  {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if(!j.is_object() || !j.contains("type") || !j.at("type").is_string())
  {
    throw ConfigError("message must be an object with a string 'type'");
  }
  const auto type = j.at("type").get<std::string>();
  Command c;
  if(type == "force")
  {
    detail::expect_keys(j, {"type", "f_h1"}, {"f_h2"}, "force message");
    c.kind = Command::Kind::force;
    c.f_h1 = detail::get_number(j, "f_h1", "force message");
    c.f_h2 = j.contains("f_h2") ? detail::get_number(j, "f_h2", "force message") : std::nan("");
    if(!std::isfinite(c.f_h1)) throw ConfigError("force message: f_h1 must be finite");
  }
  else if(type == "reset")
  {
    detail::expect_keys(j, {"type"}, {}, "reset message");
    c.kind = Command::Kind::reset;
  }
  else if(type == "set_profile")
  {
    detail::expect_keys(j, {"type", "profile"}, {}, "set_profile message");
    c.kind = Command::Kind::set_profile;
    if(!j.at("profile").is_null()) c.profile = force_profile_from_json(j.at("profile"));
  }
  else if(type == "step")
  {
    detail::expect_keys(j, {"type"}, {"n"}, "step message");
    c.kind = Command::Kind::step;
    if(j.contains("n"))
    {
      if(!j.at("n").is_number_integer() || j.at("n").get<int>() < 1) throw ConfigError("step message: n must be a positive integer");
      c.steps = j.at("n").get<int>();
    }
  }
  else
  {
    throw ConfigError("unknown message type '" + type + "'");
  }
  return c;
}

std::optional<nlohmann::json> ServeSession::submit(const std::string & line)
{
  try
  {
    queue_.push_back(parse(line));
    return std::nullopt;
  }
  catch(const std::exception & e)
  {
    return nlohmann::json{{"type", "error"}, {"message", e.what()}};
  }
}

ServeSession::Command ServeSession::pop()
{
  auto c = std::move(queue_.front());
  queue_.pop_front();
  return c;
}

int ServeSession::apply(const Command & c)
{
  switch(c.kind)
  {
    case Command::Kind::force:
      f_h1_ = c.f_h1;
      if(std::isfinite(c.f_h2))
      {
        f_h2_ = c.f_h2;
        session_.set_vertical_force(f_h2_);
      }
      profile_.reset();
      return 1;
    case Command::Kind::reset:
      f_h1_ = 0.0;
      f_h2_ = base_f_h2_;
      profile_.reset();
      session_.set_vertical_force(base_f_h2_);
      session_.reset();
      return 0;
    case Command::Kind::set_profile:
      profile_ = c.profile;
      profile_start_ = session_.state().t;
      return 0;
    case Command::Kind::step:
      return c.steps;
  }
  return 0;
}

nlohmann::json ServeSession::tick()
{
  if(profile_)
  {
    const auto & p = *profile_;
    const double start = profile_start_;
    session_.tick([&p, start](double t) { return p.eval(t - start); });
    f_h1_ = session_.last_sample().f_h1;
  }
  else
  {
    const double f = f_h1_;
    session_.tick([f](double) { return f; });
  }
  return state_message();
}

nlohmann::json ServeSession::state_message() const
{
  const auto & e = session_.last_sample();
  auto frames = nlohmann::json::array();
  frames.push_back({0.0, 0.0});
  for(const auto & p : forward_kinematics(session_.model(), e.q)) frames.push_back({p.x(), p.y()});
  return {{"type", "state"},
          {"t", e.t},
          {"s", e.s},
          {"q", detail::vector_to_json(e.q)},
          {"zmp", e.zmp},
          {"inside_margin", e.inside_margin},
          {"inside_support", e.inside_support},
          {"f_applied", e.f_h1},
          {"f_h2_applied", f_h2_},
          {"failed", session_.failed()},
          {"failure_reason", session_.failed() ? nlohmann::json(to_string(session_.failure())) : nlohmann::json(nullptr)},
          {"frames", frames}};
}

Server::Server(ServeSession & session, ServeOptions options) : session_(session), options_(std::move(options)) {}

Server::~Server()
{
  if(listen_fd_ >= 0) ::close(listen_fd_);
  for(int fd : wake_)
  {
    if(fd >= 0) ::close(fd);
  }
}

bool Server::bind(std::string & error)
{
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if(listen_fd_ < 0)
  {
    error = std::strerror(errno);
    return false;
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
  if(::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1)
  {
    error = "invalid host '" + options_.host + "'";
    return false;
  }
  if(::bind(listen_fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 4) != 0)
  {
    error = std::strerror(errno);
    return false;
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if(::pipe(wake_) != 0)
  {
    error = std::strerror(errno);
    return false;
  }
  return true;
}

void Server::stop()
{
  if(wake_[1] >= 0)
  {
    const char b = 1;
    [[maybe_unused]] auto n = ::write(wake_[1], &b, 1);
  }
}

namespace
{

bool send_line(int fd, const nlohmann::json & j)
{
  const auto text = j.dump() + "\n";
  std::size_t sent = 0;
  while(sent < text.size())
  {
    const auto n = ::send(fd, text.data() + sent, text.size() - sent, MSG_NOSIGNAL);
    if(n < 0 && errno == EINTR) continue;
    if(n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

} // namespace

void Server::run()
{
  for(;;)
  {
    pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {wake_[0], POLLIN, 0}};
    if(::poll(fds, 2, -1) < 0)
    {
      if(errno == EINTR) continue;
      return;
    }
    if(fds[1].revents) return;
    const int client = ::accept(listen_fd_, nullptr, nullptr);
    if(client < 0) continue;
    serve_client(client);
    ::close(client);
    if(options_.once) return;
  }
}

void Server::serve_client(int fd)
{
  using clock = std::chrono::steady_clock;
  ServeSession::Command reset;
  reset.kind = ServeSession::Command::Kind::reset;
  session_.apply(reset);
  if(!send_line(fd, session_.state_message())) return;

  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(session_.session().tick_period()));
  auto deadline = clock::now() + period;
  std::string buffer;
  bool open = true;
  while(open)
  {
    int timeout = -1;
    if(!options_.fast)
    {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
      timeout = static_cast<int>(std::max<long long>(0, left));
    }
    pollfd fds[2] = {{fd, POLLIN, 0}, {wake_[0], POLLIN, 0}};
    const int ready = ::poll(fds, 2, timeout);
    if(ready < 0 && errno != EINTR) return;
    if(ready > 0 && fds[1].revents) return;
    if(ready > 0 && fds[0].revents)
    {
      char chunk[4096];
      const auto n = ::recv(fd, chunk, sizeof chunk, 0);
      if(n <= 0)
      {
        open = false;
      }
      else
      {
        buffer.append(chunk, static_cast<std::size_t>(n));
        for(auto pos = buffer.find('\n'); pos != std::string::npos; pos = buffer.find('\n'))
        {
          auto line = buffer.substr(0, pos);
          buffer.erase(0, pos + 1);
          if(!line.empty() && line.back() == '\r') line.pop_back();
          if(line.find_first_not_of(" \t") == std::string::npos) continue;
          if(auto err = session_.submit(line))
          {
            if(!send_line(fd, *err)) return;
          }
        }
      }
    }
    if(options_.fast)
    {
      while(session_.has_pending())
      {
        const auto c = session_.pop();
        const int ticks = session_.apply(c);
        if(ticks == 0 && !send_line(fd, session_.state_message())) return;
        for(int k = 0; k < ticks; ++k)
        {
          if(!send_line(fd, session_.tick())) return;
        }
      }
    }
    else if(clock::now() >= deadline)
    {
      while(session_.has_pending()) session_.apply(session_.pop());
      if(!send_line(fd, session_.tick())) return;
      deadline += period;
      if(clock::now() > deadline + period) deadline = clock::now() + period;
    }
  }
}

} // namespace spatialref
