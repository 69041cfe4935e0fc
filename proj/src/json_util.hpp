#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "spatialref/errors.hpp"

namespace spatialref::detail
{

/// Rejects keys outside `allowed` and reports missing `required` ones.
inline void expect_keys(const nlohmann::json & j,
                        std::initializer_list<std::string_view> required,
                        std::initializer_list<std::string_view> optional,
                        std::string_view context)
{
  if(!j.is_object())
  {
    throw ConfigError(std::string(context) + ": expected an object");
  }
  for(auto it = j.begin(); it != j.end(); ++it)
  {
    bool known = false;
    for(auto k : required) known = known || k == it.key();
    for(auto k : optional) known = known || k == it.key();
    if(!known)
    {
      throw ConfigError(std::string(context) + ": unknown field '" + it.key() + "'");
    }
  }
  for(auto k : required)
  {
    if(!j.contains(std::string(k)))
    {
      throw ConfigError(std::string(context) + ": missing field '" + std::string(k) + "'");
    }
  }
}

inline double get_number(const nlohmann::json & j, const std::string & key, std::string_view context)
{
  const auto & v = j.at(key);
  if(!v.is_number())
  {
    throw ConfigError(std::string(context) + ": field '" + key + "' must be a number");
  }
  return v.get<double>();
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json & j, std::string_view context)
{
  if(!j.is_array())
  {
    throw ConfigError(std::string(context) + ": expected an array of numbers");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for(std::size_t i = 0; i < j.size(); ++i)
  {
    if(!j[i].is_number())
    {
      throw ConfigError(std::string(context) + ": expected an array of numbers");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd & v)
{
  auto out = nlohmann::json::array();
  for(Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline nlohmann::json read_json_file(const std::string & path)
{
  std::ifstream in(path);
  if(!in)
  {
    throw ConfigError("cannot open '" + path + "'");
  }
  try
  {
    return nlohmann::json::parse(in);
  }
  catch(const nlohmann::json::parse_error & e)
  {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for(unsigned char c : bytes)
  {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

} // namespace spatialref::detail
