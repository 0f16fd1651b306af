// placeholder; the full CLI lands once the estimator modules are in
int main() { return 0; }
