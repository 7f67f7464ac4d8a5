from fedcy.dataset_readers.scenario import ScenarioReader, client_document, write_scenario
