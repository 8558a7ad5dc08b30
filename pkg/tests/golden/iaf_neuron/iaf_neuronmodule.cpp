// iaf_neuronmodule.cpp: generated by nestmlc 0.1.0. Do not edit.
//
// Registers the module's models and defines the runtime shim they use.
#include "iaf_neuron.h"
#include <iostream>

namespace {
double nestml_h = 0.1;
}

const double nestml_E = 2.718281828459045;

void nestml_RingBuffer::add_value(long lag, double value) { pending[lag] += value; }

double nestml_RingBuffer::get_value(long lag) {
  const double value = pending[lag];
  pending.erase(lag);
  return value;
}

void nestml_RingBuffer::clear() { pending.clear(); }

nestml_BadParameter::nestml_BadParameter(const char* name) {
  std::cerr << "invalid value for " << name << std::endl;
}

double nestml_resolution() { return nestml_h; }

long nestml_steps(double duration_ms) { return static_cast<long>(duration_ms / nestml_h + 0.5); }

double nestml_time(long origin, long lag) { return (origin + lag) * nestml_h; }

void nestml_send_spike(void* model, long lag) {
  std::cout << "spike from " << model << " at lag " << lag << std::endl;
}

void nestml_log_info(const std::string& message) { std::clog << message << std::endl; }

template <typename Model>
void nestml_register_model(const char* name) {
  std::clog << "registering " << name << std::endl;
}

void iaf_neuron_init() {
  nestml_register_model<iaf_neuron>("iaf_neuron");
}
