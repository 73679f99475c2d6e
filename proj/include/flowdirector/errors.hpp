#pragma once

#include <stdexcept>
#include <string>

namespace flowdirector {

// Base for every domain error raised by this service.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- model ---
class IllegalTransition : public Error {
public:
    using Error::Error;
};

class ConflictError : public Error {
public:
    using Error::Error;
};

class StorageCorrupt : public Error {
public:
    using Error::Error;
};

class UnknownRule : public Error {
public:
    using Error::Error;
};

// --- lp ---
class Infeasible : public Error {
public:
    using Error::Error;
};

class GridTooLarge : public Error {
public:
    using Error::Error;
};

// --- adapters ---
class SourceUnavailable : public Error {
public:
    using Error::Error;
};

class UnknownSite : public Error {
public:
    using Error::Error;
};

class EndpointBusy : public Error {
public:
    using Error::Error;
};

class ProviderError : public Error {
public:
    using Error::Error;
};

class UnknownCircuit : public Error {
public:
    using Error::Error;
};

class ToolUnavailable : public Error {
public:
    using Error::Error;
};

// --- monitor ---
class InsufficientData : public Error {
public:
    using Error::Error;
};

// --- simulator / config ---
class ScenarioInvalid : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace flowdirector
